"""LoRA recovery fine-tuning and the two training strategies."""

from .lora import LoraConfig, LoraHandle, LoraLinear, attach_lora, merge_lora, merged_state_dict
from .trainer import StageTrace, TrainConfig, Trainer, collate, lr_schedule, train_stage, traces_to_csv
from .strategies import StrategyResult, encode_corpus, run_strategy, text_windows

__all__ = [
    "LoraConfig", "LoraHandle", "LoraLinear", "attach_lora", "merge_lora", "merged_state_dict",
    "StageTrace", "TrainConfig", "Trainer", "collate", "lr_schedule", "train_stage", "traces_to_csv",
    "StrategyResult", "encode_corpus", "run_strategy", "text_windows",
]
