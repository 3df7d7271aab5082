"""EEG preprocessing and wavelet compression of channel signals.

Each channel is shortened by repeatedly applying one level of an orthonormal
discrete wavelet transform, keeping only the approximation coefficients, and
finally resampling to an exact target length.  The compressed values are then
quantized to small integers so a channel fits in a bounded number of prompt
tokens.  Two serializations are supported: ``W`` writes one line per channel,
``WtoS`` splits a longer compressed channel into consecutive segments, one
line each.
"""

from __future__ import annotations

import json
import math
import re
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

GENDERS = ("female", "male", "unspecified")

#: Orthonormal analysis low-pass filters.  High-pass is derived by the
#: usual quadrature-mirror rule g[i] = (-1)^i h[L-1-i].
_FILTERS = {
    "haar": np.array([1.0, 1.0]) / math.sqrt(2.0),
    "db4": np.array(
        [
            0.23037781330885523,
            0.7148465705525415,
            0.6308807679295904,
            -0.02798376941698385,
            -0.18703481171888114,
            0.030841381835986965,
            0.032883011666982945,
            -0.010597401784997278,
        ]
    ),
}

WAVELETS = tuple(_FILTERS)


class PreprocessWarning(UserWarning):
    """Raised (as a warning) when a preprocessing step had to be skipped."""


@dataclass
class Channel:
    name: str
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)


@dataclass
class RawRecording:
    """A multichannel EEG recording with demographics and an optional label."""

    subject_id: str
    gender: str
    age: int
    sampling_rate_hz: float
    channels: list[Channel]
    facial_features: str | None = None
    label: str | None = None

    def validate(self) -> None:
        if self.gender not in GENDERS:
            raise ValueError(f"unknown gender {self.gender!r}")
        if self.age < 0:
            raise ValueError("age must be non-negative")
        if self.sampling_rate_hz <= 0:
            raise ValueError("sampling_rate_hz must be positive")
        if not self.channels:
            raise ValueError("recording has no channels")
        names = [ch.name for ch in self.channels]
        if len(set(names)) != len(names) or any(not n for n in names):
            raise ValueError("channel names must be unique and non-empty")
        lengths = {len(ch.samples) for ch in self.channels}
        if len(lengths) != 1:
            raise ValueError("all channels must have equal sample count")
        if lengths.pop() < 2:
            raise ValueError("channels need at least 2 samples")

    def to_dict(self) -> dict:
        d = {
            "subject_id": self.subject_id,
            "gender": self.gender,
            "age": self.age,
            "sampling_rate_hz": self.sampling_rate_hz,
            "channels": [
                {"name": ch.name, "samples": ch.samples.tolist()} for ch in self.channels
            ],
        }
        if self.facial_features is not None:
            d["facial_features"] = self.facial_features
        if self.label is not None:
            d["label"] = self.label
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RawRecording":
        rec = cls(
            subject_id=d["subject_id"],
            gender=d["gender"],
            age=int(d["age"]),
            sampling_rate_hz=float(d["sampling_rate_hz"]),
            channels=[Channel(c["name"], np.asarray(c["samples"], dtype=np.float64)) for c in d["channels"]],
            facial_features=d.get("facial_features"),
            label=d.get("label"),
        )
        rec.validate()
        return rec


def load_recording(path) -> RawRecording:
    with open(path, "r", encoding="utf-8") as f:
        return RawRecording.from_dict(json.load(f))


def save_recording(rec: RawRecording, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(rec.to_dict(), f)


@dataclass
class CompressionConfig:
    """How to shorten and serialize a channel.

    ``W`` compresses each channel to ``target_len`` points and writes one
    line per channel.  ``WtoS`` compresses to a longer ``target_len`` and
    splits the result into ``segments`` consecutive lines.
    """

    method: str = "W"
    target_len: int = 50
    segments: int = 1
    wavelet: str = "haar"
    quant_bins: int = 256

    def __post_init__(self):
        if self.method not in ("W", "WtoS"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.target_len <= 0 or self.segments <= 0:
            raise ValueError("target_len and segments must be positive")
        if self.method == "WtoS" and self.target_len % self.segments != 0:
            raise ValueError("target_len must be divisible by segments")
        if self.wavelet not in _FILTERS:
            raise ValueError(f"unknown wavelet {self.wavelet!r}")
        if self.quant_bins < 2:
            raise ValueError("quant_bins must be >= 2")

    @classmethod
    def for_w(cls, **kw) -> "CompressionConfig":
        return cls(method="W", target_len=50, segments=1, **kw)

    @classmethod
    def for_wtos(cls, **kw) -> "CompressionConfig":
        return cls(method="WtoS", target_len=500, segments=10, **kw)


@dataclass
class CompressedChannel:
    name: str
    values: np.ndarray
    quantized: list[int]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if len(self.values) != len(self.quantized):
            raise ValueError("values and quantized must have equal length")


def preprocess(rec: RawRecording, detrend: bool = True) -> RawRecording:
    """Linear detrend per channel, then common-average re-reference.

    Recordings with a single channel are only detrended; re-referencing a
    lone channel would zero it out, so it is skipped with a warning.
    """
    rec.validate()
    data = np.stack([ch.samples for ch in rec.channels])
    if detrend:
        data = _detrend_linear(data)
    if data.shape[0] >= 2:
        data = data - data.mean(axis=0, keepdims=True)
    else:
        warnings.warn(
            "re-reference skipped: need at least 2 channels", PreprocessWarning
        )
    channels = [Channel(ch.name, row) for ch, row in zip(rec.channels, data)]
    return replace(rec, channels=channels)


def _detrend_linear(data: np.ndarray) -> np.ndarray:
    """Remove the per-row least-squares affine component a + b*t."""
    n = data.shape[-1]
    t = np.arange(n, dtype=np.float64)
    basis = np.stack([np.ones(n), t], axis=1)  # n x 2
    coef, *_ = np.linalg.lstsq(basis, data.T, rcond=None)
    return data - (basis @ coef).T


def dwt_single_level(x: np.ndarray, wavelet: str = "haar") -> tuple[np.ndarray, np.ndarray]:
    """One level of the periodized orthonormal DWT.

    Odd-length inputs are first padded by repeating the final sample.  The
    periodization makes the level an orthogonal map, so
    ``||approx||^2 + ||detail||^2 == ||x||^2`` exactly (up to float error).
    """
    h = _FILTERS[wavelet]
    x = np.asarray(x, dtype=np.float64)
    if len(x) % 2 == 1:
        x = np.concatenate([x, x[-1:]])
    n = len(x)
    g = (h[::-1] * np.power(-1.0, np.arange(len(h))))  # quadrature mirror
    idx = (2 * np.arange(n // 2)[:, None] + np.arange(len(h))[None, :]) % n
    windows = x[idx]
    return windows @ h, windows @ g


def resample_linear(x: np.ndarray, m: int) -> np.ndarray:
    """Linearly resample to exactly ``m`` points, endpoints preserved."""
    x = np.asarray(x, dtype=np.float64)
    if len(x) == m:
        return x.copy()
    if m == 1:
        return x[:1].copy()
    src = np.arange(len(x), dtype=np.float64)
    dst = np.linspace(0.0, len(x) - 1.0, m)
    return np.interp(dst, src, x)


def dwt_compress(samples, cfg: CompressionConfig) -> np.ndarray:
    """Shorten ``samples`` to exactly ``cfg.target_len`` points.

    Approximation-only cascade: apply DWT levels while the current length is
    at least twice the target, then linearly resample the leftover
    approximation (whose length lies in [target, 2*target)) to the target.
    A signal already at the target length passes through unchanged.
    """
    a = np.asarray(samples, dtype=np.float64)
    if len(a) < cfg.target_len:
        raise ValueError(
            f"signal shorter than target: {len(a)} < {cfg.target_len}"
        )
    while len(a) >= 2 * cfg.target_len:
        a, _ = dwt_single_level(a, cfg.wavelet)
    return resample_linear(a, cfg.target_len)


def quantize(values, quant_bins: int) -> list[int]:
    """Max-abs normalize to [-1, 1], then bin uniformly to integers.

    An all-zero input maps to the center bin.  The mapping is monotone in
    the input value.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("cannot quantize empty input")
    peak = np.max(np.abs(v))
    if peak == 0.0:
        return [quant_bins // 2] * v.size
    norm = v / peak
    q = np.floor((norm + 1.0) / 2.0 * quant_bins).astype(np.int64)
    return np.clip(q, 0, quant_bins - 1).tolist()


def compress_channel(ch: Channel, cfg: CompressionConfig) -> CompressedChannel:
    values = dwt_compress(ch.samples, cfg)
    return CompressedChannel(ch.name, values, quantize(values, cfg.quant_bins))


def compress_recording(rec: RawRecording, cfg: CompressionConfig) -> list[CompressedChannel]:
    rec.validate()
    return [compress_channel(ch, cfg) for ch in rec.channels]


def serialize_channel(ch: CompressedChannel) -> str:
    """One prompt line: ``"<name>: q1 q2 ... qN"``."""
    return f"{ch.name}: " + " ".join(str(q) for q in ch.quantized)


def segment_serialize(ch: CompressedChannel, cfg: CompressionConfig) -> list[str]:
    """Segment lines ``"<name>[k]: ..."`` covering the channel in order."""
    seg_len = cfg.target_len // cfg.segments
    lines = []
    for k in range(cfg.segments):
        part = ch.quantized[k * seg_len : (k + 1) * seg_len]
        lines.append(f"{ch.name}[{k + 1}]: " + " ".join(str(q) for q in part))
    return lines


def channel_lines(ch: CompressedChannel, cfg: CompressionConfig) -> list[str]:
    if cfg.method == "WtoS":
        return segment_serialize(ch, cfg)
    return [serialize_channel(ch)]


_LINE_RE = re.compile(r"^(?P<name>[^:\[\]]+)(?:\[(?P<seg>\d+)\])?:\s*(?P<vals>.*)$")


def parse_channel_line(line: str) -> tuple[str, int | None, list[int]]:
    """Inverse of serialization: ``(name, segment_index_or_None, values)``."""
    m = _LINE_RE.match(line.strip())
    if m is None:
        raise ValueError(f"not a channel line: {line!r}")
    seg = int(m.group("seg")) if m.group("seg") else None
    vals = [int(tok) for tok in m.group("vals").split()]
    return m.group("name"), seg, vals
