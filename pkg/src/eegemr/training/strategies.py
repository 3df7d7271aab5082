"""The two recovery-training strategies.

Strategy 1 attaches LoRA to the pruned model and trains only the adapters
on the task corpus.  Strategy 2 first runs one full-parameter stage on a
general plain-text corpus, then the same LoRA phase on the task corpus.
Both produce per-stage merged checkpoints so any stage can be evaluated or
served afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..data import PromptRecord
from ..model import MicroLM
from ..tokenizer import BOS_ID, StructuredTokenizer, encode_record
from .lora import LoraConfig, attach_lora, merge_lora, merged_state_dict
from .trainer import StageTrace, TrainConfig, Trainer

STRATEGY1 = "strategy1"
STRATEGY2 = "strategy2"


@dataclass
class StrategyResult:
    which: str
    model: MicroLM  # adapters merged
    traces: list[StageTrace] = field(default_factory=list)
    general_traces: list[StageTrace] = field(default_factory=list)
    lora_param_count: int = 0
    full_param_count: int = 0

    def all_traces(self) -> list[StageTrace]:
        return self.general_traces + self.traces


def text_windows(tok: StructuredTokenizer, text: str, window: int = 128) -> list[tuple[list[int], list[int]]]:
    """Chunk plain text into next-token training windows (loss everywhere)."""
    ids = tok.encode(text)
    out = []
    for s in range(0, len(ids), window):
        chunk = [BOS_ID] + ids[s:s + window]
        if len(chunk) < 2:
            continue
        out.append((chunk, [0] + [1] * (len(chunk) - 1)))
    return out


def encode_corpus(tok: StructuredTokenizer, records: list[PromptRecord]) -> list[tuple[list[int], list[int]]]:
    return [encode_record(tok, r.prompt, r.response_text()) for r in records]


def run_strategy(which: str, pruned_model: MicroLM, general_corpus: str | None,
                 task_corpus: list[PromptRecord], cfg: TrainConfig,
                 tokenizer: StructuredTokenizer, lora_cfg: LoraConfig | None = None,
                 out_dir=None, meta: dict | None = None) -> StrategyResult:
    if which not in (STRATEGY1, STRATEGY2):
        raise ValueError(f"unknown strategy {which!r}")
    if not task_corpus:
        raise ValueError("task corpus is empty")
    lora_cfg = lora_cfg or LoraConfig()
    result = StrategyResult(which=which, model=pruned_model)
    result.full_param_count = pruned_model.num_parameters()
    task = encode_corpus(tokenizer, task_corpus)

    if which == STRATEGY2:
        if not general_corpus or not general_corpus.strip():
            raise ValueError("strategy2 requires a non-empty general corpus")
        window = min(128, pruned_model.cfg.max_seq_len - 1)
        windows = text_windows(tokenizer, general_corpus, window=window)
        for p in pruned_model.parameters():
            p.requires_grad_(True)
        general_trainer = Trainer(pruned_model, cfg, tokenizer=tokenizer,
                                  out_dir=None, meta=meta)
        result.general_traces.append(general_trainer.train_stage(windows, stage_idx=0))

    handle = attach_lora(pruned_model, lora_cfg)
    result.lora_param_count = handle.trainable_param_count()
    trainer = Trainer(pruned_model, cfg, handle.trainable_parameters(), tokenizer,
                      out_dir=out_dir, checkpoint_state_fn=lambda: merged_state_dict(handle),
                      meta={**(meta or {}), "strategy": which})
    for stage in range(1, cfg.stages + 1):
        result.traces.append(trainer.train_stage(task, stage_idx=stage))
    result.model = merge_lora(handle)
    return result
