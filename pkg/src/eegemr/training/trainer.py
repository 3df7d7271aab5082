"""Mini-batch trainer with warmup schedule and stage bookkeeping.

One stage = ``epochs_per_stage`` epochs of seeded shuffled batches.  The
loss is masked next-token cross entropy plus optional L1/L2 penalties over
the trainable parameters; gradients are norm-clipped.  Loss traces are kept
per step and can be dumped to CSV; an optional checkpoint is written when a
stage ends.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..model import MicroLM, sequence_loss
from ..tokenizer import PAD_ID, StructuredTokenizer
from ..checkpoint import save_checkpoint


@dataclass
class TrainConfig:
    lr: float = 1e-5
    weight_decay: float = 0.0
    l1_coeff: float = 0.0
    l2_coeff: float = 0.0
    warmup_steps: int | None = None  # None -> 5% of first-stage steps
    epochs_per_stage: int = 3
    stages: int = 5
    batch_size: int = 8
    seed: int = 0
    clip_norm: float = 1.0

    def validate(self) -> None:
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.stages < 1:
            raise ValueError("stages must be >= 1")
        if self.epochs_per_stage < 1 or self.batch_size < 1:
            raise ValueError("epochs_per_stage and batch_size must be >= 1")


@dataclass
class StageTrace:
    stage: int
    losses: list[float] = field(default_factory=list)
    seconds: float = 0.0
    checkpoint_path: str | None = None

    @property
    def mean_loss(self) -> float:
        return float(np.mean(self.losses)) if self.losses else float("nan")


def lr_schedule(step: int, cfg: TrainConfig, warmup_steps: int | None = None) -> float:
    """Linear ramp 0 -> lr over the warmup, constant afterwards."""
    if step < 0:
        raise ValueError("step must be >= 0")
    warmup = cfg.warmup_steps if warmup_steps is None else warmup_steps
    if warmup is None:
        raise ValueError("warmup_steps unresolved")
    if warmup <= 0 or step >= warmup:
        return cfg.lr
    return cfg.lr * step / warmup


def collate(chunk: list[tuple[list[int], list[int]]]) -> tuple[torch.Tensor, torch.Tensor]:
    length = max(len(ids) for ids, _ in chunk)
    ids = torch.full((len(chunk), length), PAD_ID, dtype=torch.long)
    mask = torch.zeros((len(chunk), length), dtype=torch.long)
    for row, (i, m) in enumerate(chunk):
        ids[row, :len(i)] = torch.tensor(i, dtype=torch.long)
        mask[row, :len(m)] = torch.tensor(m, dtype=torch.long)
    return ids, mask


class Trainer:
    """Owns the optimizer across stages so Adam state carries over."""

    def __init__(self, model: MicroLM, cfg: TrainConfig,
                 trainable: list[torch.nn.Parameter] | None = None,
                 tokenizer: StructuredTokenizer | None = None,
                 out_dir=None, checkpoint_state_fn=None, meta: dict | None = None):
        cfg.validate()
        self.model = model
        self.cfg = cfg
        self.params = trainable if trainable is not None else [
            p for p in model.parameters() if p.requires_grad]
        if not self.params:
            raise ValueError("no trainable parameters")
        self.opt = torch.optim.AdamW(self.params, lr=cfg.lr, weight_decay=cfg.weight_decay)
        self.global_step = 0
        self.warmup = cfg.warmup_steps
        self.tokenizer = tokenizer
        self.out_dir = Path(out_dir) if out_dir is not None else None
        # lets LoRA runs checkpoint a merged copy instead of the wrapped module
        self.checkpoint_state_fn = checkpoint_state_fn
        self.meta = dict(meta or {})

    def _penalty(self) -> torch.Tensor:
        total = torch.zeros((), dtype=self.params[0].dtype)
        if self.cfg.l1_coeff:
            total = total + self.cfg.l1_coeff * sum(p.abs().sum() for p in self.params)
        if self.cfg.l2_coeff:
            total = total + self.cfg.l2_coeff * sum(p.pow(2).sum() for p in self.params)
        return total

    def train_stage(self, corpus: list[tuple[list[int], list[int]]], stage_idx: int) -> StageTrace:
        if not corpus:
            raise ValueError("empty corpus")
        cfg = self.cfg
        steps_per_epoch = math.ceil(len(corpus) / cfg.batch_size)
        if self.warmup is None:
            self.warmup = max(1, math.ceil(0.05 * steps_per_epoch * cfg.epochs_per_stage))

        torch.manual_seed(cfg.seed + 7919 * stage_idx)
        rng = np.random.default_rng(cfg.seed + 7919 * stage_idx)
        trace = StageTrace(stage=stage_idx)
        self.model.train()
        start = time.time()
        for _epoch in range(cfg.epochs_per_stage):
            order = rng.permutation(len(corpus))
            for s in range(0, len(order), cfg.batch_size):
                chunk = [corpus[i] for i in order[s:s + cfg.batch_size]]
                ids, mask = collate(chunk)
                lr = lr_schedule(self.global_step, cfg, self.warmup)
                for grp in self.opt.param_groups:
                    grp["lr"] = lr
                loss = sequence_loss(self.model(ids), ids, mask) + self._penalty()
                value = float(loss.item())
                if not math.isfinite(value):
                    raise RuntimeError(
                        f"training diverged: loss={value} at stage {stage_idx}, "
                        f"step {self.global_step}")
                self.opt.zero_grad()
                loss.backward()
                if cfg.clip_norm > 0:
                    torch.nn.utils.clip_grad_norm_(self.params, cfg.clip_norm)
                self.opt.step()
                self.global_step += 1
                trace.losses.append(value)
        trace.seconds = time.time() - start
        self.model.eval()

        if self.out_dir is not None and self.tokenizer is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            path = self.out_dir / f"stage{stage_idx:02d}.bin"
            if self.checkpoint_state_fn is not None:
                snapshot = MicroLM(self.model.cfg)
                snapshot.load_state_dict(self.checkpoint_state_fn())
                save_checkpoint(snapshot, self.tokenizer, path,
                                meta={**self.meta, "stage": stage_idx})
            else:
                save_checkpoint(self.model, self.tokenizer, path,
                                meta={**self.meta, "stage": stage_idx})
            trace.checkpoint_path = str(path)
        return trace


def train_stage(model: MicroLM, corpus: list[tuple[list[int], list[int]]],
                cfg: TrainConfig, stage_idx: int,
                tokenizer: StructuredTokenizer | None = None, out_dir=None) -> StageTrace:
    """One-shot stage run with a fresh optimizer (see Trainer for runs)."""
    trainable = [p for p in model.parameters() if p.requires_grad]
    return Trainer(model, cfg, trainable, tokenizer, out_dir).train_stage(corpus, stage_idx)


def traces_to_csv(traces: list[StageTrace], path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["stage", "step", "loss"])
        for t in traces:
            for i, loss in enumerate(t.losses):
                w.writerow([t.stage, i, f"{loss:.6f}"])
