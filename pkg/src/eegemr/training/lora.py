"""Low-rank adapters over the micro LM's linear projections.

The adapted map is ``x -> base(x) + (alpha/r) * dropout(x) @ A @ B`` with
A an in×r Gaussian and B an r×out zero matrix, so a freshly attached
adapter changes nothing.  The base weights are frozen; merging folds the
update into the base weight and restores plain Linear modules.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn

from ..model import MicroLM

DEFAULT_TARGETS = ("q_proj", "k_proj", "v_proj", "o_proj", "gate_proj", "up_proj", "down_proj")


@dataclass
class LoraConfig:
    r: int = 8
    alpha: float = 32.0
    dropout: float = 0.5
    targets: tuple[str, ...] = DEFAULT_TARGETS

    def validate(self) -> None:
        if self.r <= 0:
            raise ValueError("rank must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if not self.targets:
            raise ValueError("no targets")


class LoraLinear(nn.Module):
    def __init__(self, base: nn.Linear, cfg: LoraConfig):
        super().__init__()
        self.base = base
        self.scale = cfg.alpha / cfg.r
        self.drop = nn.Dropout(cfg.dropout)
        dtype = base.weight.dtype
        self.lora_A = nn.Parameter(torch.empty(base.in_features, cfg.r, dtype=dtype))
        self.lora_B = nn.Parameter(torch.zeros(cfg.r, base.out_features, dtype=dtype))
        nn.init.normal_(self.lora_A, mean=0.0, std=0.02)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.base(x) + self.scale * (self.drop(x) @ self.lora_A) @ self.lora_B

    def delta_weight(self) -> torch.Tensor:
        """The (out, in) update folded in on merge."""
        return self.scale * (self.lora_A @ self.lora_B).T


@dataclass
class LoraHandle:
    model: MicroLM
    cfg: LoraConfig
    modules: dict  # dotted module path -> LoraLinear
    merged: bool = False

    def trainable_parameters(self) -> list[nn.Parameter]:
        params = []
        for m in self.modules.values():
            params += [m.lora_A, m.lora_B]
        return params

    def trainable_param_count(self) -> int:
        return sum(p.numel() for p in self.trainable_parameters())


def _parent_and_attr(model: nn.Module, path: str) -> tuple[nn.Module, str]:
    parts = path.split(".")
    mod = model
    for p in parts[:-1]:
        mod = getattr(mod, p)
    return mod, parts[-1]


def attach_lora(model: MicroLM, cfg: LoraConfig) -> LoraHandle:
    """Wrap every target projection; freeze everything else."""
    cfg.validate()
    found = {name: mod for name, mod in model.named_modules()
             if isinstance(mod, nn.Linear) and name.split(".")[-1] in cfg.targets}
    present = {name.split(".")[-1] for name in found}
    missing = set(cfg.targets) - present
    if missing:
        raise ValueError(f"unknown LoRA targets: {sorted(missing)}")

    for p in model.parameters():
        p.requires_grad_(False)
    wrapped = {}
    for name, mod in found.items():
        parent, attr = _parent_and_attr(model, name)
        lora = LoraLinear(mod, cfg)
        setattr(parent, attr, lora)
        wrapped[name] = lora
    return LoraHandle(model=model, cfg=cfg, modules=wrapped)


def merge_lora(handle: LoraHandle) -> MicroLM:
    """Fold adapters into the base weights and restore plain Linears."""
    if handle.merged:
        raise RuntimeError("adapter already merged")
    with torch.no_grad():
        for name, lora in handle.modules.items():
            lora.base.weight += lora.delta_weight()
            parent, attr = _parent_and_attr(handle.model, name)
            setattr(parent, attr, lora.base)
    handle.merged = True
    for p in handle.model.parameters():
        p.requires_grad_(True)
    return handle.model


def merged_state_dict(handle: LoraHandle) -> dict:
    """A plain-model state dict with the current adapter folded in.

    Does not consume the adapter — used for per-stage checkpoints while
    training continues.
    """
    if handle.merged:
        raise RuntimeError("adapter already merged")
    plain = {}
    deltas = {name: lora.delta_weight() for name, lora in handle.modules.items()}
    for key, tensor in handle.model.state_dict().items():
        if key.endswith(".base.weight"):
            mod = key[:-len(".base.weight")]
            plain[mod + ".weight"] = (tensor + deltas[mod]).clone()
        elif key.endswith(".base.bias"):
            plain[key.replace(".base.bias", ".bias")] = tensor.clone()
        elif ".lora_A" in key or ".lora_B" in key:
            continue
        else:
            plain[key] = tensor.clone()
    return plain
