"""Layer dependency graph.

The model is viewed as a chain of L components — embedding, each decoder
layer, and the lm_head (which absorbs the final norm).  Each component
contributes an input node and an output node, tagged with the pruning
scheme its channels index: the shared residual width, or the vocabulary
axis.  A symmetric 2L x 2L boolean matrix records which node pairs must be
pruned together; connected components of this matrix later become the
parameter groups.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import ModelConfig

SCHEME_RESIDUAL = "residual"
SCHEME_VOCAB = "vocab"


@dataclass(frozen=True)
class Node:
    component: str  # "embed", "decoder.<i>", "lm_head"
    side: str       # "in" or "out"
    scheme: str

    @property
    def name(self) -> str:
        return f"{self.component}.{self.side}"


@dataclass
class LayerGraph:
    nodes: list[Node]
    layer_count: int  # L: embedding + decoders + lm_head

    def __post_init__(self) -> None:
        if len(self.nodes) != 2 * self.layer_count:
            raise ValueError(f"expected {2 * self.layer_count} nodes, got {len(self.nodes)}")

    def index(self, component: str, side: str) -> int:
        for i, n in enumerate(self.nodes):
            if n.component == component and n.side == side:
                return i
        raise KeyError(f"{component}.{side}")


def build_dependency_graph(cfg: ModelConfig) -> tuple[LayerGraph, np.ndarray]:
    """Build the node list and symmetric dependency matrix for ``cfg``.

    Components sit in residual order: embed, decoder.0..n-1, lm_head.  The
    embedding's input scheme and the head's output scheme are the vocabulary
    axis, which never joins the residual group — that keeps token ids and
    logit rows intact no matter how hard the interior is pruned.
    """
    cfg.validate()
    components = ["embed"] + [f"decoder.{i}" for i in range(cfg.n_layers)] + ["lm_head"]
    nodes: list[Node] = []
    for comp in components:
        in_scheme = SCHEME_VOCAB if comp == "embed" else SCHEME_RESIDUAL
        out_scheme = SCHEME_VOCAB if comp == "lm_head" else SCHEME_RESIDUAL
        nodes.append(Node(comp, "in", in_scheme))
        nodes.append(Node(comp, "out", out_scheme))
    graph = LayerGraph(nodes, layer_count=len(components))

    n = len(nodes)
    F = np.zeros((n, n), dtype=bool)

    def connect(a: int, b: int) -> None:
        F[a, b] = F[b, a] = True

    for i, comp in enumerate(components):
        a_in, a_out = 2 * i, 2 * i + 1
        # intra-component: input and output widths are tied iff same scheme
        # (decoder blocks pass the residual straight through their skips).
        if nodes[a_in].scheme == nodes[a_out].scheme:
            connect(a_in, a_out)
        # chain to the next component along the residual stream
        if i + 1 < len(components):
            b_in = 2 * (i + 1)
            if nodes[a_out].scheme == nodes[b_in].scheme:
                connect(a_out, b_in)
    return graph, F


def check_symmetry(F: np.ndarray) -> None:
    """Raise if the dependency matrix is not symmetric."""
    if F.shape[0] != F.shape[1]:
        raise ValueError(f"matrix not square: {F.shape}")
    bad = np.argwhere(F != F.T)
    if len(bad):
        a, b = bad[0]
        raise ValueError(f"dependency matrix asymmetric at ({a}, {b})")
