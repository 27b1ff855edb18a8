"""Backend interfaces for the external models: chat LLM, VQA and captioner."""

from __future__ import annotations

import time
from typing import Protocol, Sequence

from ..messages import ChatMessage, FixtureKey
from ..perception import DirectionalCell
from .calllog import CallLog, CallRecord


class ChatBackend(Protocol):
    log: CallLog

    def chat(self, messages: Sequence[ChatMessage], *, key: FixtureKey | None = None) -> str: ...


class VQABackend(Protocol):
    log: CallLog

    def vqa(self, cell: DirectionalCell, question: str, *, key: FixtureKey | None = None) -> str: ...


class CaptionBackend(Protocol):
    log: CallLog

    def caption(self, image_ref: str) -> str: ...


class LoggedBackend:
    slot = "chat"

    def __init__(self, log: CallLog | None = None):
        self.log = log if log is not None else CallLog()

    def _record(self, phase: str, key, endpoint: str, started: float, attempts: int = 1, ok: bool = True):
        self.log.append(
            CallRecord(
                slot=self.slot,
                phase=phase,
                key="" if key is None else str(key),
                endpoint=endpoint,
                latency=time.perf_counter() - started,
                attempts=attempts,
                ok=ok,
            )
        )


def phase_of(key: FixtureKey | None) -> str:
    return key.phase if key is not None else ""
