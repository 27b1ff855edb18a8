"""Fixture-replay backends.

Fixture file::

    {"entries": {"<episode>:<step>:<phase>[:<i>]": "text" | {"error": "message"}},
     "vqa": {"<viewpoint>:<heading>:<elevation>:<question>": "answer"},
     "policy": "random" | "oracle" | "heuristic",   # optional, answers keys not in entries
     "seed": 0}

A key without the ``:<i>`` suffix matches sub-index 0. An ``{"error": ...}``
entry raises BackendFailure, which is how fixtures inject failures.
"""

from __future__ import annotations

import json
import time
from pathlib import Path
from typing import Mapping, Sequence

from ..errors import BackendFailure, FixtureMiss
from ..messages import ChatMessage, FixtureKey
from ..perception import DirectionalCell
from .base import ChatBackend, LoggedBackend
from .calllog import CallLog


class ScriptedChat(LoggedBackend):
    slot = "chat"

    def __init__(self, entries: Mapping[str, object], fallback: ChatBackend | None = None,
                 log: CallLog | None = None):
        super().__init__(log)
        self.entries = dict(entries)
        self.fallback = fallback

    def lookup(self, key: FixtureKey) -> object:
        for k in (str(key), key.short()) if key.index == 0 else (str(key),):
            if k in self.entries:
                return self.entries[k]
        raise FixtureMiss(str(key))

    def chat(self, messages: Sequence[ChatMessage], *, key: FixtureKey | None = None) -> str:
        if not messages:
            raise ValueError("chat needs at least one message")
        if key is None:
            raise FixtureMiss("<no key>")
        started = time.perf_counter()
        try:
            value = self.lookup(key)
        except FixtureMiss:
            if self.fallback is None:
                self._record(key.phase, key, "fixture", started, ok=False)
                raise
            return self.fallback.chat(messages, key=key)
        if isinstance(value, dict) and "error" in value:
            self._record(key.phase, key, "fixture", started, ok=False)
            raise BackendFailure(str(value["error"]))
        self._record(key.phase, key, "fixture", started)
        return str(value)


class ScriptedVQA(LoggedBackend):
    slot = "vqa"

    def __init__(self, entries: Mapping[str, str], fallback=None, log: CallLog | None = None):
        super().__init__(log)
        self.entries = dict(entries)
        self.fallback = fallback

    def vqa(self, cell: DirectionalCell, question: str, *, key: FixtureKey | None = None) -> str:
        started = time.perf_counter()
        k = f"{cell.ref}:{question}"
        if k in self.entries:
            value = self.entries[k]
            if isinstance(value, dict) and "error" in value:
                self._record("vqa", k, "fixture", started, ok=False)
                raise BackendFailure(str(value["error"]))
            self._record("vqa", k, "fixture", started)
            return str(value)
        if self.fallback is not None:
            return self.fallback.vqa(cell, question, key=key)
        self._record("vqa", k, "fixture", started, ok=False)
        raise FixtureMiss(k)


def load_fixture(path: str | Path) -> dict:
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict) or not isinstance(doc.get("entries", {}), dict):
        raise ValueError(f"{path}: fixture must be an object with an 'entries' map")
    return doc
