"""Pruning plans: rank channels, pick survivors, shrink tensors.

The ratio is primary; the threshold θ recorded per group is derived as the
importance of the strongest channel that was removed.  Attention groups
cannot drop arbitrary query columns — the kept width must factor as
n_heads′ · head_dim′ with n_heads′ a multiple of the (fixed) kv head count —
so the planner picks that factor pair by grid search over a ladder of
intermediate ratios.  Each ladder step may only shrink the pair chosen at
the previous step, which makes removals nested across ratios: a channel
gone at ratio r stays gone at every larger ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import torch

from ..model import MicroLM, ModelConfig
from .graph import build_dependency_graph
from .groups import ParamGroup, channel_importance, group_parameters


@dataclass
class GroupDecision:
    group_id: str
    keep: list[int]
    removed: list[int]
    theta: float
    kept_heads: list[int] | None = None
    kept_dims: list[int] | None = None


@dataclass
class PruningPlan:
    ratio: float
    cfg: ModelConfig
    decisions: dict[str, GroupDecision]
    head_coupling: tuple[int, int]  # (n_heads', head_dim'), uniform across layers
    alpha: float = 0.0  # contraction strength: accepted by the algorithm, unused

    def is_identity(self) -> bool:
        return all(not d.removed for d in self.decisions.values())


def _ladder(ratio: float) -> list[float]:
    steps = [k / 10 for k in range(1, 10) if k / 10 < ratio - 1e-12]
    steps.append(ratio)
    return steps


def head_coupling_chain(n_heads: int, n_kv_heads: int, head_dim: int,
                        ratio: float) -> list[tuple[int, int]]:
    """(n_heads', head_dim') at each ladder step up to ``ratio``.

    Each step minimizes |n_heads′·head_dim′ − (1−r)·q_width| over pairs no
    larger than the previous step's choice, with n_heads′ a positive
    multiple of n_kv_heads.  Ties prefer larger head_dim′, then more heads.
    """
    q_width = n_heads * head_dim
    chain = []
    ph, pd = n_heads, head_dim
    for r in _ladder(ratio):
        target = (1.0 - r) * q_width
        best = None
        for h in range(n_kv_heads, ph + 1, n_kv_heads):
            for d in range(1, pd + 1):
                gap = abs(h * d - target)
                key = (gap, -d, -h)
                if best is None or key < best[0]:
                    best = (key, (h, d))
        ph, pd = best[1]
        chain.append((ph, pd))
    return chain


def _rank_removed(imp: np.ndarray, n_remove: int) -> tuple[list[int], list[int], float]:
    """Drop the ``n_remove`` weakest channels; exact ties drop the lower index."""
    order = np.lexsort((np.arange(len(imp)), imp))  # importance asc, index asc
    removed = sorted(int(i) for i in order[:n_remove])
    keep = sorted(int(i) for i in order[n_remove:])
    theta = float(imp[removed].max()) if removed else 0.0
    return keep, removed, theta


def make_plan(groups: list[ParamGroup], weights: dict, cfg: ModelConfig,
              ratio: float) -> PruningPlan:
    if not 0.0 <= ratio < 1.0:
        raise ValueError(f"ratio must be in [0, 1), got {ratio}")

    if ratio == 0.0:
        hh, dd = cfg.n_heads, cfg.head_dim
    else:
        hh, dd = head_coupling_chain(cfg.n_heads, cfg.n_kv_heads, cfg.head_dim, ratio)[-1]

    decisions: dict[str, GroupDecision] = {}
    for g in groups:
        if not g.prunable:
            decisions[g.id] = GroupDecision(g.id, list(range(g.channel_count)), [], 0.0)
            continue
        imp = channel_importance(g, weights, cfg)
        if g.kind == "attn":
            hd = cfg.head_dim
            # fixed rankings over all heads / all dims keep selections nested
            head_imp = imp.reshape(cfg.n_heads, hd).sum(axis=1)
            dim_imp = imp.reshape(cfg.n_heads, hd).sum(axis=0)
            per_kv = hh // cfg.n_kv_heads
            rep = cfg.n_heads // cfg.n_kv_heads
            kept_heads: list[int] = []
            for kv in range(cfg.n_kv_heads):
                block = list(range(kv * rep, (kv + 1) * rep))
                order = sorted(block, key=lambda h: (-head_imp[h], h))
                kept_heads.extend(sorted(order[:per_kv]))
            order = sorted(range(hd), key=lambda j: (-dim_imp[j], j))
            kept_dims = sorted(order[:dd])
            keep = sorted(h * hd + j for h in kept_heads for j in kept_dims)
            removed = sorted(set(range(g.channel_count)) - set(keep))
            theta = float(imp[removed].max()) if removed else 0.0
            decisions[g.id] = GroupDecision(g.id, keep, removed, theta,
                                            kept_heads=kept_heads, kept_dims=kept_dims)
        else:
            n_remove = math.ceil(ratio * g.channel_count)
            if n_remove >= g.channel_count:
                raise ValueError(f"ratio {ratio} empties group {g.id}")
            keep, removed, theta = _rank_removed(imp, n_remove)
            decisions[g.id] = GroupDecision(g.id, keep, removed, theta)
    return PruningPlan(ratio=ratio, cfg=cfg, decisions=decisions, head_coupling=(hh, dd))


def _take(t: torch.Tensor, axis: int, idx: list[int]) -> torch.Tensor:
    return t.index_select(axis, torch.tensor(idx, dtype=torch.long, device=t.device))


def apply_plan(weights: dict, plan: PruningPlan) -> tuple[ModelConfig, dict]:
    """Physically shrink tensors; kept channels retain their relative order."""
    cfg = plan.cfg
    res = plan.decisions["residual"].keep
    hh, dd = plan.head_coupling
    mlp_keep = {l: plan.decisions[f"mlp.{l}"].keep for l in range(cfg.n_layers)}
    new_cfg = ModelConfig(
        vocab_size=cfg.vocab_size,
        d_model=len(res),
        n_layers=cfg.n_layers,
        n_heads=hh,
        n_kv_heads=cfg.n_kv_heads,
        head_dim=dd,
        d_mlp=len(mlp_keep[0]) if cfg.n_layers else cfg.d_mlp,
        max_seq_len=cfg.max_seq_len,
        rope_theta=cfg.rope_theta,
        norm_eps=cfg.norm_eps,
        tie_embeddings=cfg.tie_embeddings,
    )
    for l, kept in mlp_keep.items():
        if len(kept) != new_cfg.d_mlp:
            raise ValueError(f"mlp keep counts differ across layers (layer {l})")

    out: dict[str, torch.Tensor] = {}
    out["embed.weight"] = _take(weights["embed.weight"], 1, res)
    for l in range(cfg.n_layers):
        p = f"layers.{l}"
        att = plan.decisions[f"attn.{l}"]
        q_idx = att.keep
        kv_idx = sorted(kv * cfg.head_dim + j for kv in range(cfg.n_kv_heads)
                        for j in att.kept_dims)
        out[f"{p}.input_norm.weight"] = _take(weights[f"{p}.input_norm.weight"], 0, res)
        out[f"{p}.attn.q_proj.weight"] = _take(_take(weights[f"{p}.attn.q_proj.weight"], 0, q_idx), 1, res)
        out[f"{p}.attn.q_proj.bias"] = _take(weights[f"{p}.attn.q_proj.bias"], 0, q_idx)
        for n in ("k_proj", "v_proj"):
            out[f"{p}.attn.{n}.weight"] = _take(_take(weights[f"{p}.attn.{n}.weight"], 0, kv_idx), 1, res)
            out[f"{p}.attn.{n}.bias"] = _take(weights[f"{p}.attn.{n}.bias"], 0, kv_idx)
        out[f"{p}.attn.o_proj.weight"] = _take(_take(weights[f"{p}.attn.o_proj.weight"], 0, res), 1, q_idx)
        out[f"{p}.post_attn_norm.weight"] = _take(weights[f"{p}.post_attn_norm.weight"], 0, res)
        mk = mlp_keep[l]
        out[f"{p}.mlp.gate_proj.weight"] = _take(_take(weights[f"{p}.mlp.gate_proj.weight"], 0, mk), 1, res)
        out[f"{p}.mlp.up_proj.weight"] = _take(_take(weights[f"{p}.mlp.up_proj.weight"], 0, mk), 1, res)
        out[f"{p}.mlp.down_proj.weight"] = _take(_take(weights[f"{p}.mlp.down_proj.weight"], 0, res), 1, mk)
    out["final_norm.weight"] = _take(weights["final_norm.weight"], 0, res)
    out["lm_head.weight"] = _take(weights["lm_head.weight"], 1, res)
    return new_cfg, out


def prune_model(model: MicroLM, ratio: float) -> tuple[MicroLM, PruningPlan]:
    """Plan and apply pruning at ``ratio``; returns the smaller model."""
    graph, F = build_dependency_graph(model.cfg)
    groups = group_parameters(graph, F, model.cfg)
    weights = model.state_dict()
    plan = make_plan(groups, weights, model.cfg, ratio)
    new_cfg, new_weights = apply_plan(weights, plan)
    pruned = MicroLM(new_cfg)
    pruned = pruned.to(next(model.parameters()).dtype)
    pruned.load_state_dict(new_weights)
    return pruned, plan
