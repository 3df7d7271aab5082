import { describe, expect, it } from "vitest";

import { checkRecordingText } from "../src/validate.js";

function recording(overrides: Record<string, unknown> = {}): Record<string, unknown> {
  return {
    subject_id: "S0001",
    sampling_rate_hz: 250,
    channels: [
      { name: "Fp1", samples: [0.1, 0.2, 0.3, 0.4] },
      { name: "Cz", samples: [1, 2, 3, 4] },
    ],
    ...overrides,
  };
}

describe("checkRecordingText", () => {
  it("accepts a well-formed recording", () => {
    const check = checkRecordingText(JSON.stringify(recording()));
    expect(check.ok).toBe(true);
    expect(check.recording?.subject_id).toBe("S0001");
    expect(check.recording?.channels.map((c) => c.name)).toEqual(["Fp1", "Cz"]);
  });

  it("defaults subject_id to anonymous", () => {
    const rec = recording();
    delete rec.subject_id;
    const check = checkRecordingText(JSON.stringify(rec));
    expect(check.ok).toBe(true);
    expect(check.recording?.subject_id).toBe("anonymous");
  });

  it("lifts demographics for prefilling when the file carries them", () => {
    const check = checkRecordingText(
      JSON.stringify(recording({ gender: "female", age: 53, facial_features: "neutral" })),
    );
    expect(check.ok).toBe(true);
    expect(check.demographics).toEqual({ gender: "female", age: 53, facial_features: "neutral" });
  });

  it("rejects non-JSON with a parse message", () => {
    const check = checkRecordingText("{nope");
    expect(check.ok).toBe(false);
    expect(check.errors[0]).toMatch(/not valid JSON/);
  });

  it("rejects a top-level array", () => {
    expect(checkRecordingText("[1,2]").ok).toBe(false);
  });

  it.each([
    ["missing rate", recording({ sampling_rate_hz: undefined })],
    ["zero rate", recording({ sampling_rate_hz: 0 })],
    ["string rate", recording({ sampling_rate_hz: "250" })],
  ])("rejects %s", (_name, rec) => {
    const check = checkRecordingText(JSON.stringify(rec));
    expect(check.ok).toBe(false);
    expect(check.errors.join(" ")).toMatch(/sampling_rate_hz/);
  });

  it("rejects empty or missing channels", () => {
    expect(checkRecordingText(JSON.stringify(recording({ channels: [] }))).ok).toBe(false);
    const rec = recording();
    delete rec.channels;
    expect(checkRecordingText(JSON.stringify(rec)).ok).toBe(false);
  });

  it("rejects a channel with an empty name or no samples", () => {
    const noName = recording({ channels: [{ name: "", samples: [1, 2] }] });
    expect(checkRecordingText(JSON.stringify(noName)).errors.join(" ")).toMatch(/name/);
    const noSamples = recording({ channels: [{ name: "Fp1", samples: [] }] });
    expect(checkRecordingText(JSON.stringify(noSamples)).errors.join(" ")).toMatch(/samples/);
  });

  it("rejects non-finite samples (JSON.parse turns 1e999 into Infinity)", () => {
    const text = '{"sampling_rate_hz": 250, "channels": [{"name": "Fp1", "samples": [1, 1e999]}]}';
    const check = checkRecordingText(text);
    expect(check.ok).toBe(false);
    expect(check.errors.join(" ")).toMatch(/finite/);
  });

  it("rejects duplicate channel names", () => {
    const rec = recording({
      channels: [
        { name: "Fp1", samples: [1, 2] },
        { name: "Fp1", samples: [3, 4] },
      ],
    });
    expect(checkRecordingText(JSON.stringify(rec)).errors.join(" ")).toMatch(/unique/);
  });

  it("rejects unequal channel lengths", () => {
    const rec = recording({
      channels: [
        { name: "Fp1", samples: [1, 2, 3] },
        { name: "Cz", samples: [1, 2] },
      ],
    });
    expect(checkRecordingText(JSON.stringify(rec)).errors.join(" ")).toMatch(/same sample count/);
  });

  it("rejects single-sample channels", () => {
    const rec = recording({
      channels: [
        { name: "Fp1", samples: [1] },
        { name: "Cz", samples: [2] },
      ],
    });
    expect(checkRecordingText(JSON.stringify(rec)).errors.join(" ")).toMatch(/at least 2/);
  });

  it("treats out-of-range or fractional age as a file fault", () => {
    expect(checkRecordingText(JSON.stringify(recording({ age: 200 }))).ok).toBe(false);
    expect(checkRecordingText(JSON.stringify(recording({ age: 30.5 }))).ok).toBe(false);
  });

  it("collects multiple errors in one pass", () => {
    const rec = { sampling_rate_hz: -1, channels: [{ name: "", samples: [] }] };
    const check = checkRecordingText(JSON.stringify(rec));
    expect(check.ok).toBe(false);
    expect(check.errors.length).toBeGreaterThanOrEqual(2);
  });

  it("accepts the bundled example file", async () => {
    const { readFile } = await import("node:fs/promises");
    const text = await readFile(new URL("../example-recording.json", import.meta.url), "utf-8");
    const check = checkRecordingText(text);
    expect(check.ok).toBe(true);
    expect(check.recording?.channels).toHaveLength(4);
    expect(check.demographics?.gender).toBeDefined();
  });
});
