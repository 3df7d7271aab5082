"""Optional treatment-knowledge retrieval.

Entries live in a JSONL file ({id, emotions, text} per line, embedding
optional); embeddings default to the serving model's own pooled hidden
states so everything stays local.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


@dataclass
class KnowledgeEntry:
    id: str
    emotions: list[str]
    text: str
    embedding: list[float]


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b / (na * nb))


def retrieve_context(query_embedding, kb: list[KnowledgeEntry],
                     top_n: int) -> tuple[list[KnowledgeEntry], bool]:
    """Rank by cosine similarity desc, ties by id asc.

    Returns (entries, truncated_flag); asking for more than the kb holds
    returns everything with the flag set.
    """
    if not kb:
        raise ValueError("knowledge base is empty")
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    q = np.asarray(query_embedding, dtype=np.float64)
    ranked = sorted(kb, key=lambda e: (-cosine(q, np.asarray(e.embedding)), e.id))
    if top_n > len(kb):
        return ranked, True
    return ranked[:top_n], False


def load_kb(path, embed_fn=None) -> list[KnowledgeEntry]:
    """Read entries; compute missing embeddings with ``embed_fn(text)``."""
    entries = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            obj = json.loads(line)
            emb = obj.get("embedding")
            if emb is None:
                if embed_fn is None:
                    raise ValueError(f"entry {obj.get('id')} lacks an embedding")
                emb = [float(x) for x in embed_fn(obj["text"])]
            entries.append(KnowledgeEntry(
                id=str(obj["id"]),
                emotions=list(obj.get("emotions", [])),
                text=obj["text"],
                embedding=[float(x) for x in emb],
            ))
    return entries
