"""File-backed chat sessions with a single-writer lock.

The whole store is one JSON file; every mutation rewrites it under the
lock.  Context assembly keeps the system turn and evicts the oldest other
turns until the token budget fits.
"""

from __future__ import annotations

import json
import threading
import time
from pathlib import Path

from ..tokenizer import SEP_ID, StructuredTokenizer


class SessionStore:
    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._sessions: dict[str, dict] = {}
        if self.path.exists():
            self._sessions = json.loads(self.path.read_text(encoding="utf-8"))

    def _persist(self) -> None:
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self._sessions, ensure_ascii=False), encoding="utf-8")
        tmp.replace(self.path)

    def exists(self, session_id: str) -> bool:
        return session_id in self._sessions

    def create(self, session_id: str, system_text: str) -> None:
        with self._lock:
            if session_id not in self._sessions:
                self._sessions[session_id] = {
                    "created": time.time(),
                    "turns": [{"role": "system", "text": system_text}],
                }
                self._persist()

    def append(self, session_id: str, role: str, text: str) -> None:
        with self._lock:
            if session_id not in self._sessions:
                raise KeyError(session_id)
            self._sessions[session_id]["turns"].append({"role": role, "text": text})
            self._persist()

    def turns(self, session_id: str) -> list[dict]:
        if session_id not in self._sessions:
            raise KeyError(session_id)
        return list(self._sessions[session_id]["turns"])

    def context_ids(self, session_id: str, tok: StructuredTokenizer,
                    budget: int) -> list[int]:
        """Token ids for generation: system turn + newest turns that fit.

        Turns are separated by SEP; the oldest non-system turns are dropped
        first when the running total would exceed ``budget``.
        """
        turns = self.turns(session_id)
        system = [t for t in turns if t["role"] == "system"][:1]
        rest = [t for t in turns if t["role"] != "system"]
        enc = {}
        for t in system + rest:
            enc[id(t)] = tok.encode(t["text"])
        base = sum(len(enc[id(t)]) + 1 for t in system)
        kept = list(rest)
        while kept and base + sum(len(enc[id(t)]) + 1 for t in kept) > budget:
            kept.pop(0)
        ids: list[int] = []
        for t in system + kept:
            ids.extend(enc[id(t)])
            ids.append(SEP_ID)
        return ids
