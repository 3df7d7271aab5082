"""Scoring: emotion extraction, macro-F1, BLEU, response timing.

All metrics are hand-rolled on purpose — they are part of the verification
surface, so they must not silently inherit another library's conventions.
"""

from __future__ import annotations

import math
import time
from collections import Counter
from dataclasses import dataclass, field

from .data import COARSE_CLASSES, NINE_EMOTIONS, coarse_label
from .model import GenerationParams, MicroLM, generate
from .tokenizer import BOS_ID, SEP_ID, StructuredTokenizer


def parse_emotion(text: str) -> str | None:
    """First case-insensitive occurrence of any emotion name; None if absent."""
    low = text.lower()
    best = None
    for name in NINE_EMOTIONS:
        pos = low.find(name)
        if pos >= 0 and (best is None or pos < best[0]):
            best = (pos, name)
    return best[1] if best else None


def macro_f1(preds: list, golds: list, classes: tuple) -> float:
    per_class = per_class_f1(preds, golds, classes)
    return sum(per_class.values()) / len(classes)


def per_class_f1(preds: list, golds: list, classes: tuple) -> dict:
    """Per-class F1 with the 0-convention on empty denominators.

    Predictions outside ``classes`` (including None) never count as true
    positives, so unparseable generations are wrong everywhere.
    """
    if len(preds) != len(golds):
        raise ValueError(f"length mismatch: {len(preds)} vs {len(golds)}")
    if not golds:
        raise ValueError("empty inputs")
    out = {}
    for c in classes:
        tp = sum(1 for p, g in zip(preds, golds) if p == c and g == c)
        fp = sum(1 for p, g in zip(preds, golds) if p == c and g != c)
        fn = sum(1 for p, g in zip(preds, golds) if p != c and g == c)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        out[c] = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return out


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: str, references: list[str], max_n: int = 4) -> float:
    """BLEU with brevity penalty; add-one smoothing on orders >= 2 only.

    Zero unigram overlap therefore still scores exactly 0, while short
    candidates are not annihilated by empty higher-order counts.
    """
    if not references:
        raise ValueError("empty reference set")
    cand = candidate.split()
    refs = [r.split() for r in references]
    if not cand:
        return 0.0

    log_sum = 0.0
    for n in range(1, max_n + 1):
        counts = _ngrams(cand, n)
        total = max(sum(counts.values()), 0)
        clipped = 0
        if counts:
            max_ref = Counter()
            for r in refs:
                for gram, c in _ngrams(r, n).items():
                    max_ref[gram] = max(max_ref[gram], c)
            clipped = sum(min(c, max_ref[gram]) for gram, c in counts.items())
        if n == 1:
            if clipped == 0:
                return 0.0
            p = clipped / total
        else:
            p = (clipped + 1) / (total + 1)
        log_sum += math.log(p) / max_n

    c_len = len(cand)
    r_len = min((len(r) for r in refs), key=lambda L: (abs(L - c_len), L))
    bp = 1.0 if c_len >= r_len else math.exp(1 - r_len / c_len)
    return bp * math.exp(log_sum)


def time_generation(model: MicroLM, prompts: list[list[int]],
                    params: GenerationParams) -> float:
    """Mean wall-clock seconds to generate one completion per prompt."""
    if not prompts:
        raise ValueError("need at least one prompt")
    start = time.time()
    for ids in prompts:
        generate(model, ids, params)
    return (time.time() - start) / len(prompts)


@dataclass
class EvalReport:
    task: str  # "nine" | "three"
    macro_f1: float
    per_class_f1: dict
    n_samples: int
    avg_rt_seconds: float
    top_k: int

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "macro_f1": self.macro_f1,
            "per_class_f1": dict(self.per_class_f1),
            "n_samples": self.n_samples,
            "avg_rt_seconds": self.avg_rt_seconds,
            "top_k": self.top_k,
        }


def evaluate_model(model: MicroLM, tok: StructuredTokenizer, records,
                   task: str = "nine",
                   params: GenerationParams | None = None) -> EvalReport:
    """Generate for each record, parse the emotion, score macro-F1."""
    if task not in ("nine", "three"):
        raise ValueError(f"unknown task {task!r}")
    if not records:
        raise ValueError("no records")
    params = params or GenerationParams(max_new_tokens=8)
    preds, golds = [], []
    start = time.time()
    for rec in records:
        ids = [BOS_ID] + tok.encode(rec.prompt) + [SEP_ID]
        text = tok.decode(generate(model, ids, params))
        pred = parse_emotion(text)
        gold = rec.emotion
        if task == "three":
            pred = coarse_label(pred) if pred else None
            gold = coarse_label(gold)
        preds.append(pred)
        golds.append(gold)
    avg_rt = (time.time() - start) / len(records)
    classes = NINE_EMOTIONS if task == "nine" else COARSE_CLASSES
    return EvalReport(
        task=task,
        macro_f1=macro_f1(preds, golds, classes),
        per_class_f1=per_class_f1(preds, golds, classes),
        n_samples=len(records),
        avg_rt_seconds=avg_rt,
        top_k=params.top_k,
    )
