// Pipeline progress shown next to the submission form. The server runs
// compression, prompt assembly and generation inside one POST, so those
// three advance together on the request lifecycle; the error code in a
// failure response tells us which stage to blame.

export type StageId = "validate" | "compress" | "prompt" | "generate" | "render";
export type StageStatus = "pending" | "active" | "done" | "error";

export interface Stage {
  id: StageId;
  label: string;
  status: StageStatus;
  note: string;
}

const ORDER: { id: StageId; label: string }[] = [
  { id: "validate", label: "Check recording file" },
  { id: "compress", label: "Wavelet compression" },
  { id: "prompt", label: "Prompt assembly" },
  { id: "generate", label: "Model generation" },
  { id: "render", label: "Render document" },
];

/** Which stage a server error code points at. */
export function stageForError(code: string): StageId {
  if (code === "validation_error") return "validate";
  if (code === "invalid_recording") return "compress";
  return "generate";
}

export class PipelineStages {
  stages: Stage[];

  constructor() {
    this.stages = ORDER.map(({ id, label }) => ({ id, label, status: "pending", note: "" }));
  }

  reset(): void {
    for (const s of this.stages) {
      s.status = "pending";
      s.note = "";
    }
  }

  private set(id: StageId, status: StageStatus, note = ""): void {
    const s = this.stages.find((x) => x.id === id);
    if (!s) throw new Error(`unknown stage ${id}`);
    s.status = status;
    s.note = note;
  }

  get(id: StageId): Stage {
    const s = this.stages.find((x) => x.id === id);
    if (!s) throw new Error(`unknown stage ${id}`);
    return s;
  }

  fileChecked(ok: boolean, note = ""): void {
    this.set("validate", ok ? "done" : "error", note);
  }

  requestStarted(): void {
    this.set("compress", "active");
    this.set("prompt", "active");
    this.set("generate", "active");
  }

  requestSucceeded(): void {
    this.set("compress", "done");
    this.set("prompt", "done");
    this.set("generate", "done");
    this.set("render", "active");
  }

  rendered(): void {
    this.set("render", "done");
  }

  /** Mark the blamed stage, completing everything before it and
   * resetting everything after. */
  requestFailed(code: string, message: string): void {
    const failed = stageForError(code);
    let after = false;
    for (const s of this.stages) {
      if (s.id === failed) {
        s.status = "error";
        s.note = message;
        after = true;
      } else if (!after) {
        s.status = "done";
        s.note = "";
      } else {
        s.status = "pending";
        s.note = "";
      }
    }
  }
}
