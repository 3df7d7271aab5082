// Turns server responses into display-ready structures. Section bodies
// are passed through verbatim — the console never rewrites EMR content,
// and the source view shows the exact response bytes kept by ApiClient.

import type { EmrDocument, ModelInfo, Provenance } from "./types.js";

export type SectionKey =
  | "basic_information"
  | "medical_history"
  | "physical_examination"
  | "diagnosis"
  | "treatment_plan"
  | "laboratory_results"
  | "follow_up_records"
  | "medical_expenses";

export const EMR_SECTIONS: { key: SectionKey; title: string }[] = [
  { key: "basic_information", title: "Basic information" },
  { key: "medical_history", title: "Medical history" },
  { key: "physical_examination", title: "Physical examination" },
  { key: "diagnosis", title: "Diagnosis" },
  { key: "treatment_plan", title: "Treatment plan" },
  { key: "laboratory_results", title: "Laboratory results" },
  { key: "follow_up_records", title: "Follow-up records" },
  { key: "medical_expenses", title: "Medical expenses" },
];

export interface RenderedSection {
  key: SectionKey;
  title: string;
  body: string;
}

export function emrSections(doc: EmrDocument): RenderedSection[] {
  return EMR_SECTIONS.map(({ key, title }) => ({ key, title, body: doc[key] }));
}

/**
 * Provenance footer lines. The pruning ratio is cross-checked against
 * GET /v1/models: when the serving model is listed there, its ratio is
 * the one displayed, and a disagreement with the document is called out
 * rather than papered over.
 */
export function provenanceLines(p: Provenance, models: ModelInfo[]): string[] {
  const listed = models.find((m) => m.model_id === p.model_id);
  const ratio = listed ? listed.pruning_ratio : p.pruning_ratio;
  const ratioText = ratio === null ? "unpruned" : `pruning ratio ${ratio}`;
  const lines = [
    `Model: ${p.model_id} (${ratioText})`,
    `Checkpoint: ${p.checkpoint_hash.slice(0, 12)}…`,
    `Sampling: top_k=${p.top_k}, seed=${p.seed}`,
    `Generated: ${p.timestamp}`,
  ];
  if (listed && listed.pruning_ratio !== p.pruning_ratio) {
    lines.push(
      `Warning: document reports pruning ratio ${p.pruning_ratio}, ` +
        `/v1/models reports ${listed.pruning_ratio}`,
    );
  }
  return lines;
}
