"""HTTP surface: /v1/health, /v1/models, /v1/emr, /v1/chat, and the
retrieval/session plumbing behind them."""

import json

import numpy as np
import pytest
import torch
from fastapi.testclient import TestClient

from eegemr.checkpoint import checkpoint_hash, save_checkpoint
from eegemr.model import MicroLM, ModelConfig
from eegemr.service import ServiceState, create_app, load_state
from eegemr.service.emr import SENTINEL, split_generation
from eegemr.service.kb import KnowledgeEntry, cosine, load_kb, retrieve_context
from eegemr.service.sessions import SessionStore
from eegemr.tokenizer import SEP_ID, build_tokenizer


@pytest.fixture(scope="module")
def ckpt_path(tmp_path_factory):
    tok = build_tokenizer()
    cfg = ModelConfig(vocab_size=tok.vocab_size, d_model=16, n_layers=1,
                      n_heads=2, n_kv_heads=1, head_dim=8, d_mlp=32,
                      max_seq_len=512)
    torch.manual_seed(0)
    model = MicroLM(cfg)
    path = tmp_path_factory.mktemp("svc") / "tiny.bin"
    save_checkpoint(model, tok, path,
                    meta={"model_id": "tiny-demo", "pruning_ratio": 0.5})
    return path


@pytest.fixture()
def client(ckpt_path, tmp_path):
    state = load_state(ckpt_path, sessions_path=tmp_path / "sessions.json")
    return TestClient(create_app(state))


def submission(age=30, n_samples=128, **overrides):
    rng = np.random.default_rng(0)
    body = {
        "demographics": {"gender": "male", "age": age},
        "recording": {
            "subject_id": "S0001",
            "sampling_rate_hz": 200.0,
            "channels": [
                {"name": name, "samples": rng.normal(size=n_samples).tolist()}
                for name in ("Fp1", "Fp2", "Cz", "Pz")
            ],
        },
    }
    body.update(overrides)
    return body


class TestHealthAndModels:
    def test_health_ok(self, client):
        r = client.get("/v1/health")
        assert r.status_code == 200
        assert r.json() == {"status": "ok"}

    def test_health_without_model_is_503(self):
        app = create_app(ServiceState())
        r = TestClient(app).get("/v1/health")
        assert r.status_code == 503
        assert r.json()["code"] == "model_not_loaded"

    def test_models_schema(self, client, ckpt_path):
        r = client.get("/v1/models")
        assert r.status_code == 200
        (info,) = r.json()["models"]
        assert info["model_id"] == "tiny-demo"
        assert info["checkpoint_hash"] == checkpoint_hash(ckpt_path)
        assert len(info["checkpoint_hash"]) == 64
        assert info["pruning_ratio"] == 0.5
        assert info["d_model"] == 16 and info["n_layers"] == 1
        assert info["vocab_size"] > 256 and info["max_seq_len"] == 512


class TestEmrEndpoint:
    def test_document_shape(self, client):
        r = client.post("/v1/emr", json=submission())
        assert r.status_code == 200
        doc = r.json()
        assert set(doc) == {
            "basic_information", "medical_history", "physical_examination",
            "diagnosis", "treatment_plan", "laboratory_results",
            "follow_up_records", "medical_expenses", "provenance", "session_id",
        }
        assert doc["basic_information"] == "Patient: male, 30 years old"
        # sections the model cannot know are explicitly marked, never invented
        for key in ("medical_history", "physical_examination",
                    "laboratory_results", "follow_up_records", "medical_expenses"):
            assert doc[key] == SENTINEL
        prov = doc["provenance"]
        assert prov["model_id"] == "tiny-demo"
        assert prov["top_k"] == 1 and prov["seed"] == 0
        assert doc["session_id"].startswith("s-")

    def test_deterministic_modulo_timestamp(self, client):
        a = client.post("/v1/emr", json=submission()).json()
        b = client.post("/v1/emr", json=submission()).json()
        ts_a = a["provenance"].pop("timestamp")
        ts_b = b["provenance"].pop("timestamp")
        assert a == b
        assert ts_a and ts_b  # both present, just not compared

    def test_session_key_tracks_submission(self, client):
        a = client.post("/v1/emr", json=submission(age=30)).json()
        b = client.post("/v1/emr", json=submission(age=31)).json()
        assert a["session_id"] != b["session_id"]

    def test_explicit_session_id_honoured(self, client):
        doc = client.post("/v1/emr", json=submission(session_id="s-mine")).json()
        assert doc["session_id"] == "s-mine"

    def test_age_out_of_range_is_422(self, client):
        r = client.post("/v1/emr", json=submission(age=-1))
        assert r.status_code == 422
        body = r.json()
        assert body["code"] == "validation_error"
        assert "age" in body["message"]
        assert isinstance(body["details"], list) and body["details"]
        assert "loc" in body["details"][0] and "msg" in body["details"][0]

    def test_empty_channels_is_422(self, client):
        bad = submission()
        bad["recording"]["channels"] = []
        assert client.post("/v1/emr", json=bad).status_code == 422

    def test_bad_gender_is_422_recording_error(self, client):
        bad = submission()
        bad["demographics"]["gender"] = "robot"
        r = client.post("/v1/emr", json=bad)
        assert r.status_code == 422
        assert r.json()["code"] == "invalid_recording"

    def test_too_short_signal_is_422(self, client):
        r = client.post("/v1/emr", json=submission(n_samples=10))
        assert r.status_code == 422
        assert r.json()["code"] == "invalid_recording"

    def test_bad_generation_params_is_422(self, client):
        bad = submission()
        bad["generation"] = {"top_k": 0}
        assert client.post("/v1/emr", json=bad).status_code == 422

    def test_missing_body_is_422(self, client):
        assert client.post("/v1/emr", json={}).status_code == 422


class TestChatEndpoint:
    def test_unknown_session_is_404(self, client):
        r = client.post("/v1/chat", json={"session_id": "s-nope", "question": "why?"})
        assert r.status_code == 404
        assert r.json()["code"] == "session_not_found"

    def test_round_trip_counts_turns(self, client):
        doc = client.post("/v1/emr", json=submission()).json()
        sid = doc["session_id"]
        r = client.post("/v1/chat", json={"session_id": sid, "question": "next steps?"})
        assert r.status_code == 200
        body = r.json()
        assert body["session_id"] == sid
        # system + assistant(EMR) + user + assistant
        assert body["turns"] == 4
        r2 = client.post("/v1/chat", json={"session_id": sid, "question": "and then?"})
        assert r2.json()["turns"] == 6

    def test_empty_question_is_422(self, client):
        assert client.post("/v1/chat",
                           json={"session_id": "s-x", "question": ""}).status_code == 422


class TestKnowledgeBase:
    def _kb(self):
        return [
            KnowledgeEntry("a", ["joy"], "sunlight walk", [1.0, 0.0]),
            KnowledgeEntry("b", ["fear"], "slow breathing", [0.6, 0.8]),
            KnowledgeEntry("c", ["sadness"], "journaling", [0.0, 1.0]),
        ]

    def test_cosine_hand_values(self):
        q = np.array([1.0, 0.0])
        assert cosine(q, np.array([1.0, 0.0])) == pytest.approx(1.0)
        assert cosine(q, np.array([0.6, 0.8])) == pytest.approx(0.6)
        assert cosine(q, np.array([0.0, 1.0])) == pytest.approx(0.0)
        assert cosine(q, np.zeros(2)) == 0.0

    def test_ranking_and_truncation(self):
        kb = self._kb()
        top, truncated = retrieve_context(np.array([1.0, 0.0]), kb, 2)
        assert [e.id for e in top] == ["a", "b"]
        assert truncated is False
        everything, truncated = retrieve_context(np.array([1.0, 0.0]), kb, 5)
        assert [e.id for e in everything] == ["a", "b", "c"]
        assert truncated is True

    def test_tie_breaks_by_id(self):
        kb = [KnowledgeEntry("z", [], "late", [1.0, 0.0]),
              KnowledgeEntry("a", [], "early", [2.0, 0.0])]  # same direction
        top, _ = retrieve_context(np.array([1.0, 0.0]), kb, 2)
        assert [e.id for e in top] == ["a", "z"]

    def test_validation(self):
        with pytest.raises(ValueError, match="empty"):
            retrieve_context(np.zeros(2), [], 1)
        with pytest.raises(ValueError, match="top_n"):
            retrieve_context(np.zeros(2), self._kb(), 0)

    def test_load_kb_with_and_without_embeddings(self, tmp_path):
        path = tmp_path / "kb.jsonl"
        rows = [
            {"id": "a", "emotions": ["joy"], "text": "walk", "embedding": [1.0, 0.0]},
            {"id": "b", "text": "rest"},
        ]
        path.write_text("\n".join(json.dumps(r) for r in rows), encoding="utf-8")
        kb = load_kb(path, embed_fn=lambda t: [0.5, float(len(t))])
        assert kb[0].embedding == [1.0, 0.0]
        assert kb[1].embedding == [0.5, 4.0]
        with pytest.raises(ValueError, match="lacks an embedding"):
            load_kb(path)

    def test_emr_with_kb_appends_reference_notes(self, ckpt_path, tmp_path):
        kb_path = tmp_path / "kb.jsonl"
        kb_path.write_text(json.dumps(
            {"id": "a", "emotions": [], "text": "hydrate well"}) + "\n",
            encoding="utf-8")
        state = load_state(ckpt_path, kb_path=kb_path,
                           sessions_path=tmp_path / "s.json")
        client = TestClient(create_app(state))
        doc = client.post("/v1/emr", json=submission()).json()
        sid = doc["session_id"]
        # the retrieved note lands in the stored system prompt
        system = state.sessions.turns(sid)[0]["text"]
        assert "Reference notes:" in system and "hydrate well" in system


class TestSplitGeneration:
    def test_with_marker(self):
        head, tail = split_generation("Emotion: joy\nTreatment: go outside daily")
        assert head == "Emotion: joy"
        assert tail == "go outside daily"

    def test_without_marker(self):
        head, tail = split_generation("unstructured text")
        assert head == "unstructured text" and tail == ""


class TestSessionStore:
    def test_persistence_across_reload(self, tmp_path):
        path = tmp_path / "s.json"
        store = SessionStore(path)
        store.create("s-1", "system preamble")
        store.append("s-1", "user", "hello")
        reloaded = SessionStore(path)
        assert reloaded.exists("s-1")
        assert [t["role"] for t in reloaded.turns("s-1")] == ["system", "user"]

    def test_create_is_idempotent(self, tmp_path):
        store = SessionStore(tmp_path / "s.json")
        store.create("s-1", "first")
        store.create("s-1", "second")
        assert store.turns("s-1")[0]["text"] == "first"
        assert len(store.turns("s-1")) == 1

    def test_append_to_missing_session_raises(self, tmp_path):
        store = SessionStore(tmp_path / "s.json")
        with pytest.raises(KeyError):
            store.append("s-ghost", "user", "hi")
        with pytest.raises(KeyError):
            store.turns("s-ghost")

    def test_context_keeps_system_and_evicts_oldest(self, tmp_path):
        tok = build_tokenizer()
        store = SessionStore(tmp_path / "s.json")
        store.create("s-1", "Emotion: joy")          # 3 tokens + SEP
        store.append("s-1", "user", "Fp1: 7 7 7")    # 5 tokens + SEP
        store.append("s-1", "user", "Fp2: 9 9")      # 4 tokens + SEP

        sys_ids = tok.encode("Emotion: joy")
        old_ids = tok.encode("Fp1: 7 7 7")
        new_ids = tok.encode("Fp2: 9 9")

        full = store.context_ids("s-1", tok, budget=100)
        assert full == sys_ids + [SEP_ID] + old_ids + [SEP_ID] + new_ids + [SEP_ID]

        # tight budget: the oldest non-system turn goes first
        tight = len(sys_ids) + 1 + len(new_ids) + 1
        assert store.context_ids("s-1", tok, budget=tight) == \
            sys_ids + [SEP_ID] + new_ids + [SEP_ID]

        # even tighter: only the system turn survives
        assert store.context_ids("s-1", tok, budget=len(sys_ids) + 1) == \
            sys_ids + [SEP_ID]
