"""Shared fixtures for the end-to-end tests.

The synthetic corpus and the pretrained base model are session-scoped.
The base model is provisioning, not a measured pipeline step (the timed
end-to-end checks cover pruning/recovery/evaluation on top of it), so it
is cached on disk keyed by a fingerprint of its recipe; delete the cache
directory or set EEGEMR_FIXTURE_CACHE to rebuild elsewhere. The first
build takes ~15 minutes on one CPU core and prints its cost.
"""

import hashlib
import json
import os
import time
from pathlib import Path

import pytest
import torch

from eegemr.checkpoint import load_checkpoint, save_checkpoint
from eegemr.compression import CompressionConfig
from eegemr.data import SynthConfig, build_corpus, synth_generate
from eegemr.model import MicroLM, ModelConfig
from eegemr.tokenizer import build_tokenizer
from eegemr.training import TrainConfig, Trainer, encode_corpus

SEED = 0
N_SUBJECTS = 2430
BASE_SPLIT = 2160   # records the base model pretrains on
TASK_SPLIT = 1890   # records the recovery strategies fine-tune on
# (lr, epochs, warmup_steps) per pretraining phase
BASE_PHASES = ((1.5e-3, 6, 100), (5e-4, 4, 0), (1.5e-4, 2, 0))
BASE_BATCH = 8


def _fingerprint() -> str:
    blob = json.dumps({
        "seed": SEED, "subjects": N_SUBJECTS, "split": BASE_SPLIT,
        "phases": BASE_PHASES, "batch": BASE_BATCH,
        "synth": SynthConfig().__dict__ | {"n_subjects": N_SUBJECTS},
    }, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


@pytest.fixture(scope="session")
def shared_tokenizer():
    return build_tokenizer()


@pytest.fixture(scope="session")
def full_corpus():
    recs = synth_generate(SynthConfig(n_subjects=N_SUBJECTS, seed=SEED))
    return build_corpus(recs, CompressionConfig.for_w())


@pytest.fixture(scope="session")
def corpus_splits(full_corpus):
    return {
        "base": full_corpus[:BASE_SPLIT],
        "task": full_corpus[:TASK_SPLIT],
        "held": full_corpus[BASE_SPLIT:],
    }


@pytest.fixture(scope="session")
def base_model(shared_tokenizer, corpus_splits):
    cache_dir = Path(os.environ.get("EEGEMR_FIXTURE_CACHE", "/tmp/eegemr_fixtures"))
    path = cache_dir / f"base-{_fingerprint()}.bin"
    if path.exists():
        model, _, meta = load_checkpoint(path)
        print(f"\n[fixture] base model: cache hit ({path.name}, "
              f"originally built in {meta.get('build_seconds', '?')}s)")
        return model

    tok = shared_tokenizer
    torch.manual_seed(SEED)
    model = MicroLM(ModelConfig.desk(tok.vocab_size))
    enc = encode_corpus(tok, corpus_splits["base"])
    t0 = time.time()
    for i, (lr, epochs, warmup) in enumerate(BASE_PHASES):
        cfg = TrainConfig(lr=lr, epochs_per_stage=epochs, stages=1,
                          batch_size=BASE_BATCH, seed=SEED, warmup_steps=warmup)
        Trainer(model, cfg).train_stage(enc, stage_idx=i)
    seconds = round(time.time() - t0, 1)
    cache_dir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(model, tok, path, meta={
        "model_id": "desk-base", "pruning_ratio": None,
        "build_seconds": seconds,
    })
    print(f"\n[fixture] base model: built in {seconds:.0f}s, cached at {path}")
    return model
