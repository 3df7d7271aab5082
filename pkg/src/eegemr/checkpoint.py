"""Single-file model checkpoints.

Layout: 8 magic bytes, a little-endian u32 header length, a UTF-8 JSON
header (model config, ordered tensor manifest, tokenizer vocabulary, free
meta dict), then the raw float32 tensor data in manifest order.  A JSON
sidecar with the same header is written next to the file so the contents
can be inspected without parsing the binary.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np
import torch

from .model import MicroLM, ModelConfig
from .tokenizer import StructuredTokenizer

MAGIC = b"EEGEMR01"


def save_checkpoint(model: MicroLM, tokenizer: StructuredTokenizer, path,
                    meta: dict | None = None) -> Path:
    path = Path(path)
    manifest = []
    blobs = []
    for name, tensor in model.state_dict().items():
        arr = tensor.detach().cpu().to(torch.float32).numpy()
        manifest.append({"name": name, "shape": list(arr.shape)})
        blobs.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    header = {
        "config": model.cfg.to_dict(),
        "tensors": manifest,
        "tokenizer": tokenizer.to_dict(),
        "meta": dict(meta or {}),
    }
    raw = json.dumps(header, ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(raw)))
        f.write(raw)
        for blob in blobs:
            f.write(blob)
    sidecar = {k: header[k] for k in ("config", "tensors", "meta")}
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, indent=2), encoding="utf-8")
    return path


def read_header(path) -> dict:
    with open(path, "rb") as f:
        if f.read(len(MAGIC)) != MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        (hlen,) = struct.unpack("<I", f.read(4))
        return json.loads(f.read(hlen).decode("utf-8"))


def load_checkpoint(path) -> tuple[MicroLM, StructuredTokenizer, dict]:
    with open(path, "rb") as f:
        if f.read(len(MAGIC)) != MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        (hlen,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(hlen).decode("utf-8"))
        cfg = ModelConfig.from_dict(header["config"])
        model = MicroLM(cfg)
        state = {}
        for entry in header["tensors"]:
            shape = tuple(entry["shape"])
            n = int(np.prod(shape)) if shape else 1
            buf = f.read(4 * n)
            if len(buf) != 4 * n:
                raise ValueError(f"{path}: truncated tensor {entry['name']}")
            arr = np.frombuffer(buf, dtype="<f4").reshape(shape).copy()
            state[entry["name"]] = torch.from_numpy(arr)
    model.load_state_dict(state)
    tokenizer = StructuredTokenizer.from_dict(header["tokenizer"])
    return model, tokenizer, header.get("meta", {})


def checkpoint_hash(path) -> str:
    """sha256 of the checkpoint file, used as provenance in served EMR docs."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
