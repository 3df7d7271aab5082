"""FastAPI application exposing the copilot over /v1.

Everything runs in-process against one loaded checkpoint; the service
makes no outbound network calls.  Responses are deterministic for a fixed
submission at top_k=1 apart from the provenance timestamp.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import torch
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from ..compression import Channel, CompressionConfig, RawRecording, channel_lines, compress_recording, preprocess
from ..checkpoint import checkpoint_hash, load_checkpoint
from ..clustering import embed_texts
from ..data import build_prompt
from ..metrics import parse_emotion
from ..model import GenerationParams, MicroLM, generate
from ..tokenizer import BOS_ID, SEP_ID, StructuredTokenizer
from .emr import assemble_document
from .kb import KnowledgeEntry, load_kb, retrieve_context
from .schemas import (ChatRequest, ChatResponse, EmrDocument, HealthResponse, ModelInfo,
                      ModelsResponse, PatientSubmission, Provenance)
from .sessions import SessionStore


@dataclass
class ServiceState:
    model: MicroLM | None = None
    tokenizer: StructuredTokenizer | None = None
    model_id: str = ""
    ckpt_hash: str = ""
    pruning_ratio: float | None = None
    method: CompressionConfig = field(default_factory=CompressionConfig.for_w)
    sessions: SessionStore | None = None
    kb: list[KnowledgeEntry] = field(default_factory=list)
    retrieval_top_n: int = 2


def load_state(checkpoint_path, method: str = "W", kb_path=None,
               sessions_path=None, retrieval_top_n: int = 2) -> ServiceState:
    model, tok, meta = load_checkpoint(checkpoint_path)
    model.eval()
    state = ServiceState(
        model=model,
        tokenizer=tok,
        model_id=meta.get("model_id", Path(checkpoint_path).stem),
        ckpt_hash=checkpoint_hash(checkpoint_path),
        pruning_ratio=meta.get("pruning_ratio"),
        method=CompressionConfig.for_w() if method == "W" else CompressionConfig.for_wtos(),
        sessions=SessionStore(sessions_path or Path(checkpoint_path).with_suffix(".sessions.json")),
        retrieval_top_n=retrieval_top_n,
    )
    if kb_path is not None:
        state.kb = load_kb(kb_path, embed_fn=lambda t: embed_texts(model, tok, [t])[0])
    return state


class RecordingError(ValueError):
    pass


def _error(status: int, code: str, message: str, details=None) -> JSONResponse:
    body = {"code": code, "message": message}
    if details is not None:
        body["details"] = details
    return JSONResponse(status_code=status, content=body)


def _session_key(sub: PatientSubmission) -> str:
    digest = hashlib.sha256(sub.model_dump_json().encode("utf-8")).hexdigest()
    return f"s-{digest[:16]}"


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="eegemr", version="1")
    # the web console is served from its own origin; the API carries no
    # credentials, so a blanket allowance is safe here
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def _validation(request: Request, exc: RequestValidationError):
        errs = exc.errors()
        first = errs[0] if errs else {}
        loc = ".".join(str(x) for x in first.get("loc", ()))
        detail = [{"loc": list(e.get("loc", ())), "msg": str(e.get("msg", ""))} for e in errs]
        return _error(422, "validation_error", f"{loc}: {first.get('msg', 'invalid')}", detail)

    @app.exception_handler(RecordingError)
    async def _recording(request: Request, exc: RecordingError):
        return _error(422, "invalid_recording", str(exc))

    def require_model() -> tuple[MicroLM, StructuredTokenizer]:
        if state.model is None or state.tokenizer is None:
            raise RuntimeError("model not loaded")
        return state.model, state.tokenizer

    @app.get("/v1/health", response_model=HealthResponse)
    def health():
        if state.model is None:
            return _error(503, "model_not_loaded", "no checkpoint is loaded")
        return HealthResponse(status="ok")

    @app.get("/v1/models", response_model=ModelsResponse)
    def models():
        if state.model is None:
            return _error(503, "model_not_loaded", "no checkpoint is loaded")
        cfg = state.model.cfg
        return ModelsResponse(models=[ModelInfo(
            model_id=state.model_id,
            checkpoint_hash=state.ckpt_hash,
            pruning_ratio=state.pruning_ratio,
            vocab_size=cfg.vocab_size,
            d_model=cfg.d_model,
            n_layers=cfg.n_layers,
            max_seq_len=cfg.max_seq_len,
        )])

    @app.post("/v1/emr", response_model=EmrDocument)
    def emr(sub: PatientSubmission):
        if state.model is None:
            return _error(503, "model_not_loaded", "no checkpoint is loaded")
        model, tok = require_model()
        try:
            sub.demographics.validate_gender()
            rec = RawRecording(
                subject_id=sub.recording.subject_id,
                gender=sub.demographics.gender,
                age=sub.demographics.age,
                sampling_rate_hz=sub.recording.sampling_rate_hz,
                channels=[Channel(c.name, np.asarray(c.samples, dtype=np.float64))
                          for c in sub.recording.channels],
                facial_features=sub.demographics.facial_features,
            )
            rec.validate()
            processed = preprocess(rec)
            lines = []
            for ch in compress_recording(processed, state.method):
                lines.extend(channel_lines(ch, state.method))
        except ValueError as e:
            raise RecordingError(str(e)) from e

        prompt = build_prompt(sub.demographics.gender, sub.demographics.age,
                              sub.demographics.facial_features, lines)
        if state.kb:
            query = embed_texts(model, tok, [prompt])[0]
            entries, _ = retrieve_context(query, state.kb,
                                          min(state.retrieval_top_n, len(state.kb)))
            notes = "\n".join(f"- {e.text}" for e in entries)
            prompt = prompt + "\n\nReference notes:\n" + notes

        params = GenerationParams(
            max_new_tokens=sub.generation.max_new_tokens,
            temperature=sub.generation.temperature,
            top_k=sub.generation.top_k,
            seed=sub.generation.seed,
        )
        ids = [BOS_ID] + tok.encode(prompt) + [SEP_ID]
        with torch.no_grad():
            out = generate(model, ids, params)
        text = tok.decode(out)
        emotion = parse_emotion(text)

        session_id = sub.session_id or _session_key(sub)
        state.sessions.create(session_id, prompt)
        state.sessions.append(session_id, "assistant", text)

        prov = Provenance(
            model_id=state.model_id,
            pruning_ratio=state.pruning_ratio,
            checkpoint_hash=state.ckpt_hash,
            timestamp=datetime.now(timezone.utc).isoformat(),
            top_k=params.top_k,
            seed=params.seed,
        )
        return assemble_document(sub.demographics, emotion, text, prov, session_id)

    @app.post("/v1/chat", response_model=ChatResponse)
    def chat(req: ChatRequest):
        if state.model is None:
            return _error(503, "model_not_loaded", "no checkpoint is loaded")
        model, tok = require_model()
        if not state.sessions.exists(req.session_id):
            return _error(404, "session_not_found", f"unknown session {req.session_id!r}")
        state.sessions.append(req.session_id, "user", req.question)
        max_new = 48
        budget = model.cfg.max_seq_len - max_new - 1
        ctx = state.sessions.context_ids(req.session_id, tok, budget)
        ids = [BOS_ID] + ctx
        with torch.no_grad():
            out = generate(model, ids, GenerationParams(max_new_tokens=max_new))
        answer = tok.decode(out)
        state.sessions.append(req.session_id, "assistant", answer)
        return ChatResponse(session_id=req.session_id, answer=answer,
                            turns=len(state.sessions.turns(req.session_id)))

    return app
