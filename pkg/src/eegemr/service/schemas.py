"""Request/response bodies for the /v1 HTTP surface."""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..compression import GENDERS


class Demographics(BaseModel):
    gender: str
    age: int = Field(ge=0, le=150)
    facial_features: str | None = None

    def validate_gender(self) -> None:
        if self.gender not in GENDERS:
            raise ValueError(f"gender must be one of {GENDERS}")


class ChannelIn(BaseModel):
    name: str = Field(min_length=1)
    samples: list[float] = Field(min_length=1)


class RecordingIn(BaseModel):
    subject_id: str = "anonymous"
    sampling_rate_hz: float = Field(gt=0)
    channels: list[ChannelIn] = Field(min_length=1)


class GenerationIn(BaseModel):
    max_new_tokens: int = Field(default=64, ge=1, le=256)
    temperature: float = Field(default=0.0, ge=0.0)
    top_k: int = Field(default=1, ge=1)
    seed: int = 0


class PatientSubmission(BaseModel):
    demographics: Demographics
    recording: RecordingIn
    generation: GenerationIn = GenerationIn()
    session_id: str | None = None


class Provenance(BaseModel):
    model_id: str
    pruning_ratio: float | None
    checkpoint_hash: str
    timestamp: str
    top_k: int
    seed: int


class EmrDocument(BaseModel):
    basic_information: str
    medical_history: str
    physical_examination: str
    diagnosis: str
    treatment_plan: str
    laboratory_results: str
    follow_up_records: str
    medical_expenses: str
    provenance: Provenance
    session_id: str


class ChatRequest(BaseModel):
    session_id: str
    question: str = Field(min_length=1)


class ChatResponse(BaseModel):
    session_id: str
    answer: str
    turns: int


class HealthResponse(BaseModel):
    status: str


class ModelInfo(BaseModel):
    model_id: str
    checkpoint_hash: str
    pruning_ratio: float | None
    vocab_size: int
    d_model: int
    n_layers: int
    max_seq_len: int


class ModelsResponse(BaseModel):
    models: list[ModelInfo]


class ErrorBody(BaseModel):
    code: str
    message: str
    details: list | None = None
