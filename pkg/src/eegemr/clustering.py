"""Hand-rolled k-means++ and a PCA projection for embedding diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .model import MicroLM
from .tokenizer import StructuredTokenizer


def _pairwise_sq(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Classic k-means++ seeding: spread initial centroids apart."""
    n = len(X)
    centers = [X[int(rng.integers(n))]]
    for _ in range(1, k):
        d2 = _pairwise_sq(X, np.array(centers)).min(axis=1)
        total = d2.sum()
        if total <= 0:
            centers.append(X[int(rng.integers(n))])
            continue
        probs = d2 / total
        centers.append(X[int(rng.choice(n, p=probs))])
    return np.array(centers)


def kmeans(X: np.ndarray, k: int, seed: int = 0, max_iter: int = 300,
           tol: float = 1e-6, init: np.ndarray | None = None
           ) -> tuple[np.ndarray, np.ndarray, float, list[float]]:
    """Lloyd iterations to convergence; returns (centroids, labels, inertia,
    per-iteration inertia history).

    The history is non-increasing by construction; iteration stops when the
    relative improvement drops below ``tol``.  Empty clusters are re-seeded
    with the point farthest from its centroid (lowest index on ties).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    if not 1 <= k <= len(X):
        raise ValueError(f"k={k} out of range for {len(X)} points")
    rng = np.random.default_rng(seed)
    C = np.array(init, dtype=np.float64) if init is not None else kmeans_pp_init(X, k, rng)
    if C.shape != (k, X.shape[1]):
        raise ValueError(f"bad init shape {C.shape}")

    history: list[float] = []
    labels = np.zeros(len(X), dtype=int)
    for _ in range(max_iter):
        d2 = _pairwise_sq(X, C)
        labels = d2.argmin(axis=1)
        inertia = float(d2[np.arange(len(X)), labels].sum())
        history.append(inertia)
        newC = C.copy()
        for j in range(k):
            pts = X[labels == j]
            if len(pts):
                newC[j] = pts.mean(axis=0)
            else:
                far = int(d2.min(axis=1).argmax())
                newC[j] = X[far]
        if len(history) >= 2:
            prev, cur = history[-2], history[-1]
            if prev == 0 or (prev - cur) / max(prev, 1e-300) < tol:
                C = newC
                break
        C = newC
    d2 = _pairwise_sq(X, C)
    labels = d2.argmin(axis=1)
    inertia = float(d2[np.arange(len(X)), labels].sum())
    if not history or inertia < history[-1]:
        history.append(inertia)
    return C, labels, inertia, history


def pca_2d(X: np.ndarray) -> np.ndarray:
    """Project rows onto the top-2 principal components (deterministic signs)."""
    X = np.asarray(X, dtype=np.float64)
    centered = X - X.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    comps = vt[:2]
    if comps.shape[0] < 2:
        comps = np.vstack([comps, np.zeros((2 - comps.shape[0], X.shape[1]))])
    for i in range(2):
        j = int(np.abs(comps[i]).argmax())
        if comps[i, j] < 0:
            comps[i] = -comps[i]
    return centered @ comps.T


@dataclass
class ClusterReport:
    k: int
    assignments: list[int]
    inertia: float
    projection: list[list[float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"k": self.k, "assignments": list(self.assignments),
                "inertia": self.inertia, "projection": self.projection}


def embed_texts(model: MicroLM, tok: StructuredTokenizer, texts: list[str]) -> np.ndarray:
    """Mean-pooled final-norm hidden states, one row per text."""
    rows = []
    with torch.no_grad():
        for t in texts:
            ids = tok.encode(t)[: model.cfg.max_seq_len]
            if not ids:
                raise ValueError("text encodes to zero tokens")
            h = model.pooled_hidden(torch.tensor([ids], dtype=torch.long))
            rows.append(h[0].double().numpy())
    return np.array(rows)


def embed_and_cluster(model: MicroLM, tok: StructuredTokenizer, texts: list[str],
                      k: int = 9, seed: int = 0) -> ClusterReport:
    if len(texts) < k:
        raise ValueError(f"need at least k={k} texts, got {len(texts)}")
    X = embed_texts(model, tok, texts)
    _, labels, inertia, _ = kmeans(X, k, seed=seed)
    proj = pca_2d(X)
    return ClusterReport(k=k, assignments=[int(x) for x in labels],
                         inertia=inertia, projection=proj.tolist())
