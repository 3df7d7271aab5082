"""Assemble the assisted EMR document from a generation."""

from __future__ import annotations

from .schemas import Demographics, EmrDocument, Provenance

SENTINEL = "not assessed"


def split_generation(text: str) -> tuple[str, str]:
    """Split generated text into (diagnosis rationale, treatment section)."""
    marker = "Treatment:"
    if marker in text:
        head, _, tail = text.partition(marker)
        return head.strip(), tail.strip()
    return text.strip(), ""


def assemble_document(demo: Demographics, emotion: str | None, generated: str,
                      provenance: Provenance, session_id: str) -> EmrDocument:
    """Fill the document; sections the model cannot know stay sentinel."""
    rationale, treatment = split_generation(generated)
    basic = f"Patient: {demo.gender}, {demo.age} years old"
    if demo.facial_features:
        basic += f", {demo.facial_features}"
    if emotion:
        diagnosis = f"Detected emotional state: {emotion}. Model output: {rationale}"
    else:
        diagnosis = f"Emotional state could not be parsed. Model output: {rationale}"
    return EmrDocument(
        basic_information=basic,
        medical_history=SENTINEL,
        physical_examination=SENTINEL,
        diagnosis=diagnosis,
        treatment_plan=treatment if treatment else SENTINEL,
        laboratory_results=SENTINEL,
        follow_up_records=SENTINEL,
        medical_expenses=SENTINEL,
        provenance=provenance,
        session_id=session_id,
    )
