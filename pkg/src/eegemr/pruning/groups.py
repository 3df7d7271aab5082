"""Parameter grouping: connected components of the dependency graph.

A group is a set of (tensor name, axis) pairs whose channels must be kept
or dropped together.  The residual component of the graph yields one global
group; each decoder block additionally owns two internal groups (attention
head channels and the MLP hidden width) that never surface as graph nodes
because they are invisible outside the block.  The two vocabulary axes are
tracked as explicit unprunable groups so the partition over (tensor, axis)
pairs is total.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..model import ModelConfig
from .graph import LayerGraph, SCHEME_RESIDUAL, check_symmetry


@dataclass
class ParamGroup:
    id: str
    kind: str  # "residual" | "attn" | "mlp" | "vocab_in" | "vocab_out"
    members: tuple  # ((tensor_name, axis), ...) sorted
    channel_count: int
    prunable: bool
    layer: int | None = None
    importance: float = 0.0

    def member_set(self) -> set:
        return set(self.members)


def _bfs_components(F: np.ndarray) -> list[list[int]]:
    """Connected components, expanding each seed node breadth-first."""
    n = F.shape[0]
    seen = [False] * n
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        comp = []
        queue = deque([start])
        seen[start] = True
        while queue:
            u = queue.popleft()
            comp.append(u)
            for v in np.flatnonzero(F[u]):
                if not seen[v]:
                    seen[v] = True
                    queue.append(int(v))
        comps.append(sorted(comp))
    return comps


def _residual_members(cfg: ModelConfig) -> tuple:
    members = [("embed.weight", 1)]
    for l in range(cfg.n_layers):
        p = f"layers.{l}"
        members += [
            (f"{p}.input_norm.weight", 0),
            (f"{p}.attn.q_proj.weight", 1),
            (f"{p}.attn.k_proj.weight", 1),
            (f"{p}.attn.v_proj.weight", 1),
            (f"{p}.attn.o_proj.weight", 0),
            (f"{p}.post_attn_norm.weight", 0),
            (f"{p}.mlp.gate_proj.weight", 1),
            (f"{p}.mlp.up_proj.weight", 1),
            (f"{p}.mlp.down_proj.weight", 0),
        ]
    members += [("final_norm.weight", 0), ("lm_head.weight", 1)]
    return tuple(sorted(members))


def _attn_members(l: int) -> tuple:
    p = f"layers.{l}.attn"
    return tuple(sorted([
        (f"{p}.q_proj.weight", 0),
        (f"{p}.q_proj.bias", 0),
        (f"{p}.k_proj.weight", 0),
        (f"{p}.k_proj.bias", 0),
        (f"{p}.v_proj.weight", 0),
        (f"{p}.v_proj.bias", 0),
        (f"{p}.o_proj.weight", 1),
    ]))


def _mlp_members(l: int) -> tuple:
    p = f"layers.{l}.mlp"
    return tuple(sorted([
        (f"{p}.gate_proj.weight", 0),
        (f"{p}.up_proj.weight", 0),
        (f"{p}.down_proj.weight", 1),
    ]))


def group_parameters(graph: LayerGraph, F: np.ndarray, cfg: ModelConfig) -> list[ParamGroup]:
    """Partition every (tensor, axis) pair into pruning groups."""
    check_symmetry(F)
    comps = _bfs_components(F)

    residual_nodes = {i for i, n in enumerate(graph.nodes) if n.scheme == SCHEME_RESIDUAL}
    residual_comps = [c for c in comps if set(c) & residual_nodes]
    if len(residual_comps) != 1:
        raise ValueError(
            f"residual scheme splits into {len(residual_comps)} components; dangling node")
    if set(residual_comps[0]) != residual_nodes:
        raise ValueError("residual component contains non-residual nodes")

    groups = [
        ParamGroup("residual", "residual", _residual_members(cfg), cfg.d_model, True),
        ParamGroup("vocab_in", "vocab_in", (("embed.weight", 0),), cfg.vocab_size, False),
        ParamGroup("vocab_out", "vocab_out", (("lm_head.weight", 0),), cfg.vocab_size, False),
    ]
    for l in range(cfg.n_layers):
        groups.append(ParamGroup(
            f"attn.{l}", "attn", _attn_members(l), cfg.n_heads * cfg.head_dim, True, layer=l))
        groups.append(ParamGroup(
            f"mlp.{l}", "mlp", _mlp_members(l), cfg.d_mlp, True, layer=l))
    return groups


def _slice_sq(arr: np.ndarray, axis: int, index: int) -> float:
    return float(np.square(np.take(arr, index, axis=axis)).sum())


def channel_importance(group: ParamGroup, weights: dict, cfg: ModelConfig) -> np.ndarray:
    """Per-channel importance: sum of squared L2 norms of each member slice.

    Attention groups index channels by (head, dim) coordinates of the query
    width; the shared k/v slice of a kv group is split evenly across the
    query heads it serves, so the channel vector still sums to the plain
    sum of squares over every member tensor.
    """
    arrs = {}
    for name, axis in group.members:
        if name not in weights:
            raise KeyError(f"group {group.id}: missing tensor {name}")
        arr = np.asarray(weights[name].detach().cpu().numpy(), dtype=np.float64)
        arrs[(name, axis)] = arr
        if arr.shape[axis] not in (group.channel_count, cfg.n_kv_heads * cfg.head_dim):
            raise ValueError(
                f"group {group.id}: tensor {name} axis {axis} has {arr.shape[axis]} channels")

    imp = np.zeros(group.channel_count)
    if group.kind == "attn":
        hd = cfg.head_dim
        rep = cfg.n_heads // cfg.n_kv_heads
        for (name, axis), arr in arrs.items():
            kv = arr.shape[axis] == cfg.n_kv_heads * hd and group.channel_count != cfg.n_kv_heads * hd
            for c in range(group.channel_count):
                if kv:
                    h, j = divmod(c, hd)
                    imp[c] += _slice_sq(arr, axis, (h // rep) * hd + j) / rep
                else:
                    imp[c] += _slice_sq(arr, axis, c)
    else:
        for (name, axis), arr in arrs.items():
            sq = np.square(arr)
            other = tuple(a for a in range(arr.ndim) if a != axis)
            imp += sq.sum(axis=other) if other else sq
    return imp


def group_importance(group: ParamGroup, weights: dict, cfg: ModelConfig) -> float:
    """Total group importance (Algorithm inputs): non-negative scalar."""
    return float(channel_importance(group, weights, cfg).sum())
