// Mirrors the /v1 request/response bodies. The console never invents
// fields beyond these; everything round-trips through the documented API.

export interface Demographics {
  gender: string;
  age: number;
  facial_features?: string | null;
}

export interface ChannelIn {
  name: string;
  samples: number[];
}

export interface RecordingIn {
  subject_id: string;
  sampling_rate_hz: number;
  channels: ChannelIn[];
}

export interface GenerationIn {
  max_new_tokens?: number;
  temperature?: number;
  top_k?: number;
  seed?: number;
}

export interface PatientSubmission {
  demographics: Demographics;
  recording: RecordingIn;
  generation?: GenerationIn;
  session_id?: string | null;
}

export interface Provenance {
  model_id: string;
  pruning_ratio: number | null;
  checkpoint_hash: string;
  timestamp: string;
  top_k: number;
  seed: number;
}

export interface EmrDocument {
  basic_information: string;
  medical_history: string;
  physical_examination: string;
  diagnosis: string;
  treatment_plan: string;
  laboratory_results: string;
  follow_up_records: string;
  medical_expenses: string;
  provenance: Provenance;
  session_id: string;
}

export interface ChatRequest {
  session_id: string;
  question: string;
}

export interface ChatResponse {
  session_id: string;
  answer: string;
  turns: number;
}

export interface HealthResponse {
  status: string;
}

export interface ModelInfo {
  model_id: string;
  checkpoint_hash: string;
  pruning_ratio: number | null;
  vocab_size: number;
  d_model: number;
  n_layers: number;
  max_seq_len: number;
}

export interface ModelsResponse {
  models: ModelInfo[];
}

export interface ErrorBody {
  code: string;
  message: string;
  details?: { loc: (string | number)[]; msg: string }[] | null;
}
