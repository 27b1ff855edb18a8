"""Trajectory memory: one compressed summary per executed step."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

from .errors import BackendFailure
from .messages import ChatMessage, FixtureKey
from .perception import Snapshot
from .prompts import SUMMARY_TEMPLATE

log = logging.getLogger(__name__)

MAX_SUMMARY_CHARS = 400
EMPTY_MEMORY = "(no prior steps)"


@dataclass(frozen=True)
class MemoryEntry:
    step: int
    summary: str
    action_taken: str

    def __post_init__(self):
        if not self.summary:
            raise ValueError("memory summary must be non-empty")

    def to_dict(self) -> dict:
        return {"step": self.step, "summary": self.summary, "action_taken": self.action_taken}


@dataclass
class MemoryBank:
    entries: list[MemoryEntry] = field(default_factory=list)

    def append(self, entry: MemoryEntry) -> None:
        if self.entries and entry.step <= self.entries[-1].step:
            raise ValueError(f"memory step {entry.step} does not follow {self.entries[-1].step}")
        self.entries.append(entry)

    def __len__(self) -> int:
        return len(self.entries)


def fallback_summary(step: int, snapshot: Snapshot, thought: str, action: str) -> str:
    nearest = sorted(snapshot.annotations, key=lambda a: a.distance)[:2]
    if nearest:
        seen = " and ".join(a.label for a in nearest)
    else:
        caption = next((d for d in snapshot.descriptions if d), "")
        seen = " ".join(caption.split()[:8]) or "nothing notable"
    gist = " ".join(thought.split()[:12])
    return f"Step {step}: saw {seen}; thought {gist}; moved to {action}"


def summarize_step(
    step: int,
    snapshot: Snapshot,
    thought: str,
    menu_text: str,
    action: str,
    chat=None,
    key: FixtureKey | None = None,
) -> MemoryEntry:
    """Compress one step. ``action`` is the destination viewpoint id or ``"stop"``."""
    summary = ""
    if chat is not None:
        prompt = SUMMARY_TEMPLATE.format(
            observation=snapshot.render(), thought=thought, menu=menu_text or "(none)", action=action
        )
        try:
            summary = chat.chat([ChatMessage("user", prompt)], key=key).strip()
        except BackendFailure as exc:
            log.warning("summary backend failed at step %d, using template: %s", step, exc)
    if not summary:
        summary = fallback_summary(step, snapshot, thought, action)
    return MemoryEntry(step, summary[:MAX_SUMMARY_CHARS], action)


def render_memory(bank: MemoryBank | Sequence[MemoryEntry], budget: int = 2000) -> str:
    """Render oldest-to-newest as ``"t. summary"`` lines within ``budget`` characters.

    The oldest entries are folded into a single elision line until the text
    fits. The newest summary is always kept verbatim; if even that line with
    its prefix does not fit, the bare summary is returned.
    """
    if budget < MAX_SUMMARY_CHARS:
        raise ValueError(f"budget must be at least {MAX_SUMMARY_CHARS}")
    entries = list(bank.entries if isinstance(bank, MemoryBank) else bank)
    if not entries:
        return EMPTY_MEMORY
    lines = [f"{e.step}. {e.summary}" for e in entries]
    for k in range(len(lines)):
        kept = lines[k:]
        text = "\n".join(([f"({k} earlier steps elided)"] if k else []) + kept)
        if len(text) <= budget:
            return text
    return entries[-1].summary
