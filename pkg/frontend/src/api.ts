// Thin client over the four /v1 endpoints. The EMR call keeps the raw
// response text alongside the parsed document so the source view can
// show exactly the bytes the server sent.

import type {
  ChatRequest,
  ChatResponse,
  EmrDocument,
  ErrorBody,
  HealthResponse,
  ModelsResponse,
  PatientSubmission,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: ErrorBody,
  ) {
    super(body.message);
    this.name = "ApiError";
  }
}

export interface EmrResult {
  document: EmrDocument;
  /** verbatim response body, byte-for-byte */
  raw: string;
}

async function toApiError(res: Response): Promise<ApiError> {
  const text = await res.text();
  try {
    const body = JSON.parse(text) as ErrorBody;
    if (typeof body.code === "string" && typeof body.message === "string") {
      return new ApiError(res.status, body);
    }
  } catch {
    // fall through to the generic body
  }
  return new ApiError(res.status, {
    code: "http_error",
    message: text || `HTTP ${res.status}`,
  });
}

export class ApiClient {
  private base: string;

  constructor(
    baseUrl: string,
    private fetchImpl: FetchLike = (url, init) => globalThis.fetch(url, init),
  ) {
    this.base = baseUrl.replace(/\/+$/, "");
  }

  get baseUrl(): string {
    return this.base;
  }

  private async getJson<T>(path: string): Promise<T> {
    const res = await this.fetchImpl(`${this.base}${path}`);
    if (!res.ok) throw await toApiError(res);
    return (await res.json()) as T;
  }

  private async postJson(path: string, body: unknown): Promise<Response> {
    const res = await this.fetchImpl(`${this.base}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) throw await toApiError(res);
    return res;
  }

  health(): Promise<HealthResponse> {
    return this.getJson("/v1/health");
  }

  models(): Promise<ModelsResponse> {
    return this.getJson("/v1/models");
  }

  async submitEmr(submission: PatientSubmission): Promise<EmrResult> {
    const res = await this.postJson("/v1/emr", submission);
    const raw = await res.text();
    return { document: JSON.parse(raw) as EmrDocument, raw };
  }

  async chat(request: ChatRequest): Promise<ChatResponse> {
    const res = await this.postJson("/v1/chat", request);
    return (await res.json()) as ChatResponse;
  }
}
