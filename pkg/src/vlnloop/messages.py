"""Small value types passed between the agent loop and model backends."""

from __future__ import annotations

from dataclasses import dataclass

ROLES = ("system", "user", "assistant")
PHASES = ("think", "act", "questions", "consolidate", "summarize")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if self.role != "assistant" and not self.content:
            raise ValueError(f"{self.role} message must have content")

    def to_dict(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class FixtureKey:
    """Identifies one model call inside an episode: ``<episode>:<step>:<phase>[:<i>]``."""

    episode: str
    step: int
    phase: str
    index: int = 0

    def __post_init__(self):
        if self.phase not in PHASES:
            raise ValueError(f"unknown phase {self.phase!r}")

    def __str__(self) -> str:
        return f"{self.episode}:{self.step}:{self.phase}:{self.index}"

    def short(self) -> str:
        return f"{self.episode}:{self.step}:{self.phase}"

    def with_index(self, index: int) -> FixtureKey:
        return FixtureKey(self.episode, self.step, self.phase, index)

    def with_phase(self, phase: str, index: int = 0) -> FixtureKey:
        return FixtureKey(self.episode, self.step, phase, index)
