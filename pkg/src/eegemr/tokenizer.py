"""Small structured tokenizer for EEG prompts and EMR text.

Channel lines dominate every prompt, so the vocabulary carries a dedicated
token for each quantization level 0..255: one reading costs one id.  Words
come from the fixed template texts; anything else falls back to UTF-8 byte
tokens.  Whitespace is implicit — ``decode`` re-inserts single spaces except
around punctuation listed in the joining sets — which keeps "Fp1: 7 7" at
exactly four ids.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

PAD_ID = 0
BOS_ID = 1
EOS_ID = 2
SEP_ID = 3
SPECIAL_TOKENS = ("<pad>", "<bos>", "<eos>", "<sep>")

_PRETOKEN_RE = re.compile(r"[A-Za-z][A-Za-z0-9]*|\d+|\n|[^\sA-Za-z0-9]")

#: Punctuation that glues to the preceding token on decode.
NO_SPACE_BEFORE = frozenset({":", ",", ".", ";", "!", "?", ")", "]", "'", "\n"})
#: Punctuation that glues to the following token on decode.
NO_SPACE_AFTER = frozenset({"(", "[", "'", "\n"})

_ASSET_DIR = Path(__file__).resolve().parent / "assets"

_BYTE_RE = re.compile(r"^<0x([0-9A-F]{2})>$")


def pretokenize(text: str) -> list[str]:
    """Split text into words, numbers, newlines and punctuation."""
    return _PRETOKEN_RE.findall(text)


def byte_fallback(token: str) -> list[str]:
    """Spell an out-of-vocabulary pretoken as UTF-8 byte tokens."""
    return [f"<0x{b:02X}>" for b in token.encode("utf-8")]


@dataclass
class StructuredTokenizer:
    id_to_token: list[str]

    def __post_init__(self) -> None:
        self.token_to_id = {t: i for i, t in enumerate(self.id_to_token)}
        if len(self.token_to_id) != len(self.id_to_token):
            raise ValueError("duplicate tokens in vocabulary")
        for i, tok in enumerate(SPECIAL_TOKENS):
            if self.id_to_token[i] != tok:
                raise ValueError(f"id {i} must be {tok!r}")

    @property
    def vocab_size(self) -> int:
        return len(self.id_to_token)

    def encode(self, text: str) -> list[int]:
        """Encode text to ids; no special tokens are added.

        Between two adjacent byte-fallback runs a space byte token marks the
        word boundary (when the source had one); in-vocabulary tokens rely on
        the implicit joining rules instead.
        """
        ids = []
        prev_end = None  # end offset of the previous match iff it fell back
        for m in _PRETOKEN_RE.finditer(text):
            tok = m.group(0)
            idx = self.token_to_id.get(tok)
            if idx is not None:
                ids.append(idx)
                prev_end = None
            else:
                if prev_end is not None and m.start() > prev_end:
                    ids.append(self.token_to_id["<0x20>"])
                ids.extend(self.token_to_id[b] for b in byte_fallback(tok))
                prev_end = m.end()
        return ids

    def decode(self, ids: list[int], skip_special: bool = True) -> str:
        """Invert :meth:`encode`, re-inserting implicit spaces."""
        words: list[str] = []
        pending: list[int] = []  # utf-8 bytes of a fallback run

        def flush() -> None:
            if pending:
                words.append(bytes(pending).decode("utf-8", errors="replace"))
                pending.clear()

        for i in ids:
            tok = self.id_to_token[i]
            m = _BYTE_RE.match(tok)
            if m:
                pending.append(int(m.group(1), 16))
                continue
            flush()
            if tok in SPECIAL_TOKENS:
                if not skip_special:
                    words.append(tok)
                continue
            words.append(tok)
        flush()

        out: list[str] = []
        for w in words:
            if out and w not in NO_SPACE_BEFORE and out[-1] not in NO_SPACE_AFTER:
                out.append(" ")
            out.append(w)
        return "".join(out)

    def to_dict(self) -> dict:
        return {"id_to_token": list(self.id_to_token)}

    @classmethod
    def from_dict(cls, d: dict) -> "StructuredTokenizer":
        return cls(id_to_token=list(d["id_to_token"]))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, ensure_ascii=False, indent=0)

    @classmethod
    def load(cls, path) -> "StructuredTokenizer":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def general_corpus_text() -> str:
    """The bundled plain-text corpus used for general-stage fine-tuning."""
    return (_ASSET_DIR / "general_corpus.txt").read_text(encoding="utf-8")


def default_texts(include_general: bool = True) -> list[str]:
    """Template texts whose words seed the default vocabulary."""
    from .data import FACIAL_BANK, NINE_EMOTIONS, SYSTEM_PREAMBLE, TREATMENT_PLANS, build_response

    texts = [SYSTEM_PREAMBLE, "Patient: female, 23 years old", "Patient: male, 23 years old, unspecified"]
    texts.extend(" ".join(FACIAL_BANK[k]) for k in sorted(FACIAL_BANK))
    texts.extend(build_response(e, TREATMENT_PLANS[e]) for e in NINE_EMOTIONS)
    texts.append("Fp1 Fp2 F3 F4 F7 F8 Fz C3 C4 Cz P3 P4 Pz O1 O2 Oz T7 T8")
    if include_general:
        texts.append(general_corpus_text())
    return texts


def build_tokenizer(extra_texts: list[str] = (), include_general: bool = True) -> StructuredTokenizer:
    """Build the standard vocabulary: specials, levels 0..255, bytes, words.

    Word tokens are appended in first-seen order over the template texts and
    ``extra_texts``, so the vocabulary is a deterministic function of its
    inputs.
    """
    vocab = list(SPECIAL_TOKENS)
    vocab.extend(str(v) for v in range(256))
    vocab.extend(f"<0x{b:02X}>" for b in range(256))
    seen = set(vocab)
    for text in list(default_texts(include_general)) + list(extra_texts):
        for tok in pretokenize(text):
            if tok not in seen:
                seen.add(tok)
                vocab.append(tok)
    return StructuredTokenizer(vocab)


def encode_record(tok: StructuredTokenizer, prompt: str, response: str) -> tuple[list[int], list[int]]:
    """Pack one training example: ids and a 0/1 loss mask over positions.

    Layout is ``[BOS] prompt [SEP] response [EOS]``; the mask selects the
    response span plus EOS, so loss is only charged on what the model must
    produce.
    """
    p = tok.encode(prompt)
    r = tok.encode(response)
    ids = [BOS_ID] + p + [SEP_ID] + r + [EOS_ID]
    mask = [0] * (len(p) + 2) + [1] * (len(r) + 1)
    return ids, mask
