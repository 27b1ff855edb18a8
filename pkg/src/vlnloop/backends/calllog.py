from __future__ import annotations

import threading
from dataclasses import dataclass


@dataclass(frozen=True)
class CallRecord:
    slot: str
    phase: str
    key: str
    endpoint: str
    latency: float
    attempts: int
    ok: bool


class CallLog:
    """Append-only record of backend invocations, safe for concurrent appends."""

    def __init__(self):
        self._lock = threading.Lock()
        self._records: list[CallRecord] = []

    def append(self, record: CallRecord) -> None:
        with self._lock:
            self._records.append(record)

    def records(self, slot: str | None = None, phase: str | None = None) -> list[CallRecord]:
        with self._lock:
            recs = list(self._records)
        return [r for r in recs if (slot is None or r.slot == slot) and (phase is None or r.phase == phase)]

    def count(self, slot: str | None = None, phase: str | None = None) -> int:
        return len(self.records(slot, phase))

    def clear(self) -> None:
        with self._lock:
            self._records.clear()

    def __len__(self) -> int:
        return self.count()
