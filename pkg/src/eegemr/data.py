"""Prompt records, treatment templates, and synthetic labeled EEG.

A training record has three parts: the prompt (fixed system preamble,
patient demographics, serialized channel lines), the emotion label, and a
treatment plan.  The synthetic generator produces recordings whose channels
carry a per-emotion sinusoid signature plus Gaussian noise, so the whole
pipeline can be trained and evaluated without restricted clinical archives.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .compression import Channel, CompressionConfig, GENDERS, RawRecording, channel_lines, compress_recording, preprocess

NINE_EMOTIONS = (
    "anger",
    "disgust",
    "fear",
    "sadness",
    "neutral",
    "amusement",
    "inspiration",
    "joy",
    "tenderness",
)

NEGATIVE_EMOTIONS = frozenset({"anger", "disgust", "fear", "sadness"})
POSITIVE_EMOTIONS = frozenset({"amusement", "inspiration", "joy", "tenderness"})
COARSE_CLASSES = ("positive", "negative", "neutral")

SYSTEM_PREAMBLE = (
    "You are an EEG emotion analyzer. I will input the patient's personal "
    "information and EEG signals from specific electrode positions. Please "
    "infer the patient's current emotional state and provide a detailed "
    "diagnosis along with personalized treatments based on your knowledge base."
)

#: One canonical treatment paragraph per emotion.  Deterministic text keeps
#: generation targets reproducible and BLEU-checkable.
TREATMENT_PLANS = {
    "anger": (
        "Guide the patient through slow breathing and a brief time out, then "
        "teach anger logging to spot triggers early. Review progress at the "
        "next weekly session."
    ),
    "disgust": (
        "Use graded exposure to the aversive cue together with grounding "
        "exercises, and reframe the reaction in a short cognitive session. "
        "Review progress at the next weekly session."
    ),
    "fear": (
        "Begin gentle exposure practice with paced breathing and a written "
        "safety plan the patient can carry. Review progress at the next "
        "weekly session."
    ),
    "sadness": (
        "Schedule daily pleasant activities with a simple mood diary and "
        "encourage light exercise and regular sleep. Review progress at the "
        "next weekly session."
    ),
    "neutral": (
        "No acute intervention is required. Maintain regular sleep, balanced "
        "meals and moderate exercise, and continue routine monitoring at the "
        "next scheduled visit."
    ),
    "amusement": (
        "Reinforce the current positive state by planning shared social "
        "activities and brief gratitude notes. Continue routine monitoring "
        "at the next scheduled visit."
    ),
    "inspiration": (
        "Channel the motivated state into one concrete goal with small "
        "steps, and protect rest periods to avoid burnout. Continue routine "
        "monitoring at the next scheduled visit."
    ),
    "joy": (
        "Encourage the patient to savor the moment, keep a short gratitude "
        "journal and share the experience with others. Continue routine "
        "monitoring at the next scheduled visit."
    ),
    "tenderness": (
        "Support warm social contact and simple acts of care for others, "
        "keeping a light record of connecting moments. Continue routine "
        "monitoring at the next scheduled visit."
    ),
}

#: Short facial descriptors sampled per coarse valence when synthesizing
#: demographics; mirrors clinical intake notes like "negative" in scope.
FACIAL_BANK = {
    "negative": ("furrowed brows", "tense jaw", "downcast eyes"),
    "positive": ("relaxed smile", "bright eyes", "open expression"),
    "neutral": ("even gaze", "still features", "calm face"),
}


def coarse_label(nine: str) -> str:
    """Map a nine-class emotion to positive / negative / neutral."""
    if nine in NEGATIVE_EMOTIONS:
        return "negative"
    if nine in POSITIVE_EMOTIONS:
        return "positive"
    if nine == "neutral":
        return "neutral"
    raise ValueError(f"unknown emotion {nine!r}")


def build_prompt(gender: str, age: int, facial_features: str | None, channel_lines: list[str]) -> str:
    """Assemble the full prompt: preamble, patient line, channel lines."""
    if gender not in GENDERS:
        raise ValueError(f"unknown gender {gender!r}")
    if not 0 <= age <= 150:
        raise ValueError(f"age out of range: {age}")
    if not channel_lines:
        raise ValueError("at least one channel line required")
    patient = f"Patient: {gender}, {age} years old"
    if facial_features:
        patient += f", {facial_features}"
    return SYSTEM_PREAMBLE + "\n\n" + patient + "\n\n" + "\n".join(channel_lines)


def build_response(emotion: str, treatment: str) -> str:
    """The target text the model learns to produce for a record."""
    return f"Emotion: {emotion}\nTreatment: {treatment}"


@dataclass
class RecordMeta:
    subject_id: str = ""
    method: str = "W"
    target_len: int = 50


@dataclass
class PromptRecord:
    prompt: str
    emotion: str
    treatment: str
    meta: RecordMeta = field(default_factory=RecordMeta)

    def response_text(self) -> str:
        return build_response(self.emotion, self.treatment)


def build_record(prompt: str, label: str, treatment: str, meta: RecordMeta | None = None) -> PromptRecord:
    if label not in NINE_EMOTIONS:
        raise ValueError(f"unknown emotion {label!r}")
    if not treatment:
        raise ValueError("treatment must be non-empty for training records")
    return PromptRecord(prompt, label, treatment, meta or RecordMeta())


def emit_jsonl(records: list[PromptRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            obj = {
                "prompt": rec.prompt,
                "emotion": rec.emotion,
                "treatment": rec.treatment,
                "meta": asdict(rec.meta),
            }
            f.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_jsonl(path) -> list[PromptRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            obj = json.loads(line)
            records.append(
                PromptRecord(
                    prompt=obj["prompt"],
                    emotion=obj["emotion"],
                    treatment=obj["treatment"],
                    meta=RecordMeta(**obj.get("meta", {})),
                )
            )
    return records


@dataclass
class ClassSignature:
    dominant_freq_hz: float
    amplitude: float = 10.0
    noise_sigma: float = 1.5


def default_signatures() -> dict[str, ClassSignature]:
    """Per-emotion sinusoid signatures.

    Frequencies 0.6k Hz sit well below the post-compression Nyquist rate of
    the default W scheme (4 s at 250 Hz compressed to 50 points gives an
    effective 12.5 Hz rate), so the class structure survives the
    approximation-only wavelet cascade.  The even spacing and moderate noise
    keep adjacent classes separable after 8-bit quantization; negative
    emotions occupy the low end in taxonomy order, which keeps most
    nearest-frequency confusions inside one valence group.
    """
    freqs = tuple(0.6 * k for k in range(1, 10))
    return {e: ClassSignature(f) for e, f in zip(NINE_EMOTIONS, freqs)}


@dataclass
class SynthConfig:
    n_subjects: int = 9
    channels: tuple[str, ...] = ("Fp1", "Fp2", "Cz", "Oz")
    sampling_rate_hz: float = 250.0
    duration_s: float = 4.0
    seed: int = 0
    #: Odd-indexed channels oscillate at dominant + offset, so each class is
    #: a two-frequency signature across the montage (EEG rhythms differ by
    #: site); 0 restores a single shared frequency.
    channel_freq_offset_hz: float = 0.3
    #: Channel phases come from an n-point grid over [0, 2π).  A small grid
    #: bounds the waveform templates per class so a corpus of a few thousand
    #: records covers them; 0 draws phases uniformly instead, which makes
    #: class recognition effectively phase-invariant frequency estimation —
    #: far beyond what a desk-scale model trained on this corpus can learn.
    n_phases: int = 2
    class_signature: dict[str, ClassSignature] = field(default_factory=default_signatures)

    def validate(self) -> None:
        if self.n_subjects <= 0:
            raise ValueError("n_subjects must be positive")
        if set(self.class_signature) != set(NINE_EMOTIONS):
            raise ValueError("class_signature must cover all nine emotions")
        if self.channel_freq_offset_hz < 0:
            raise ValueError("channel_freq_offset_hz must be non-negative")
        if self.n_phases < 0:
            raise ValueError("n_phases must be >= 0")
        base = [s.dominant_freq_hz for s in self.class_signature.values()]
        freqs = base + [f + self.channel_freq_offset_hz for f in base]
        if len(set(freqs)) != (len(base) if self.channel_freq_offset_hz == 0 else 2 * len(base)):
            raise ValueError("class frequencies (with channel offset) must be pairwise distinct")


def synth_generate(cfg: SynthConfig) -> list[RawRecording]:
    """Generate labeled recordings, balanced over the nine emotions.

    Subject ``i`` draws from ``default_rng(seed + i)``, so generation can be
    partitioned across workers without changing the output.
    """
    cfg.validate()
    n = int(round(cfg.sampling_rate_hz * cfg.duration_s))
    t = np.arange(n) / cfg.sampling_rate_hz
    recordings = []
    for i in range(cfg.n_subjects):
        rng = np.random.default_rng(cfg.seed + i)
        emotion = NINE_EMOTIONS[i % len(NINE_EMOTIONS)]
        sig = cfg.class_signature[emotion]
        gender = str(rng.choice(["female", "male"]))
        age = int(rng.integers(18, 61))
        facial = str(rng.choice(FACIAL_BANK[coarse_label(emotion)]))
        chans = []
        for c_idx, name in enumerate(cfg.channels):
            freq = sig.dominant_freq_hz + (cfg.channel_freq_offset_hz if c_idx % 2 else 0.0)
            if cfg.n_phases:
                phase = 2.0 * np.pi * int(rng.integers(cfg.n_phases)) / cfg.n_phases
            else:
                phase = float(rng.uniform(0.0, 2.0 * np.pi))
            scale = rng.uniform(0.8, 1.2)
            wave = sig.amplitude * scale * np.sin(2.0 * np.pi * freq * t + phase)
            noise = rng.normal(0.0, sig.noise_sigma, n)
            chans.append(Channel(name, wave + noise))
        recordings.append(
            RawRecording(
                subject_id=f"S{i:04d}",
                gender=gender,
                age=age,
                sampling_rate_hz=cfg.sampling_rate_hz,
                channels=chans,
                facial_features=facial,
                label=emotion,
            )
        )
    return recordings


def recording_to_record(rec: RawRecording, ccfg: CompressionConfig) -> PromptRecord:
    """Preprocess, compress and serialize one labeled recording."""
    if rec.label is None:
        raise ValueError("recording has no emotion label")
    processed = preprocess(rec)
    lines = []
    for ch in compress_recording(processed, ccfg):
        lines.extend(channel_lines(ch, ccfg))
    prompt = build_prompt(rec.gender, rec.age, rec.facial_features, lines)
    meta = RecordMeta(rec.subject_id, ccfg.method, ccfg.target_len)
    return build_record(prompt, rec.label, TREATMENT_PLANS[rec.label], meta)


def build_corpus(recordings: list[RawRecording], ccfg: CompressionConfig) -> list[PromptRecord]:
    return [recording_to_record(rec, ccfg) for rec in recordings]
