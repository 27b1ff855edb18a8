"""Question-answer investigation of candidate viewpoints.

The agent's Thought is turned into a few visual questions; each question is
asked of every candidate's view and the answers are attached under that
candidate in the action menu.
"""

from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .environment import Candidate
from .errors import BackendFailure
from .messages import ChatMessage, FixtureKey
from .perception import Snapshot
from .prompts import FALLBACK_QUESTION, QUESTION_TEMPLATE

log = logging.getLogger(__name__)

MAX_ANSWER_CHARS = 200
UNKNOWN_ANSWER = "unknown"

_NUMBERED = re.compile(r"^\s*\d+\s*[.):]\s*(.+?)\s*$")


@dataclass(frozen=True)
class Thought:
    step: int
    text: str

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("thought text must be non-empty")


@dataclass(frozen=True)
class QAPair:
    question: str
    answer: str
    candidate: str

    def __post_init__(self):
        if not self.question or not self.answer:
            raise ValueError("question and answer must be non-empty")

    def to_dict(self) -> dict:
        return {"question": self.question, "answer": self.answer, "candidate": self.candidate}


@dataclass(frozen=True)
class AugmentedCandidate:
    index: int
    candidate: Candidate
    base_description: str
    qa: tuple[QAPair, ...] = field(default=())

    def render(self) -> str:
        lines = [f"{self.index}. [{self.candidate.viewpoint}] {self.base_description}"]
        lines += [f"   Q: {p.question} A: {p.answer}" for p in self.qa]
        return "\n".join(lines)


def render_menu(menu: Sequence[AugmentedCandidate]) -> str:
    return "\n".join(item.render() for item in menu)


def describe_candidate(cand: Candidate, snapshot: Snapshot) -> str:
    """Bearing line plus the description of the sector the candidate lies in."""
    where = f"{cand.sector_name}, heading {cand.rel_heading:+.0f} deg"
    if snapshot.distances_included:
        where += f", {cand.euclid_dist:.1f} m away"
    return f"{where}: {snapshot.sector_text(cand.sector)}"


def bare_menu(cands: Sequence[Candidate], snapshot: Snapshot) -> list[AugmentedCandidate]:
    return [AugmentedCandidate(i, c, describe_candidate(c, snapshot)) for i, c in enumerate(cands, 1)]


def parse_questions(text: str, max_q: int) -> list[str]:
    out = []
    for line in text.splitlines():
        m = _NUMBERED.match(line)
        if m and m.group(1):
            out.append(m.group(1))
    return out[:max_q]


def generate_questions(thought: Thought, chat, max_q: int = 3, key: FixtureKey | None = None) -> list[str]:
    if max_q < 1:
        raise ValueError("max_q must be at least 1")
    prompt = QUESTION_TEMPLATE.format(max_q=max_q, thought=thought.text)
    reply = chat.chat([ChatMessage("user", prompt)], key=key)
    return parse_questions(reply, max_q) or [FALLBACK_QUESTION]


def answer_on_candidate(question: str, candidate: Candidate, vqa, key: FixtureKey | None = None) -> str:
    answer = vqa.vqa(candidate.cell, question, key=key).strip()
    return answer[:MAX_ANSWER_CHARS]


def investigate_candidates(
    thought: Thought,
    cands: Sequence[Candidate],
    snapshot: Snapshot,
    chat,
    vqa,
    *,
    max_q: int = 3,
    key: FixtureKey | None = None,
    workers: int = 1,
) -> tuple[list[str], list[AugmentedCandidate]]:
    """Ask every generated question of every candidate.

    Returns the questions and the augmented menu. A failed VQA call yields the
    answer ``"unknown"``; question generation failures propagate.
    """
    if not cands:
        raise ValueError("investigate_candidates needs at least one candidate")
    questions = generate_questions(thought, chat, max_q, key.with_phase("questions") if key else None)

    def ask(job: tuple[str, Candidate]) -> str:
        question, cand = job
        try:
            return answer_on_candidate(question, cand, vqa, key) or UNKNOWN_ANSWER
        except BackendFailure as exc:
            log.warning("VQA failed for %s on %r: %s", cand.viewpoint, question, exc)
            return UNKNOWN_ANSWER

    jobs = [(q, c) for q in questions for c in cands]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            answers = list(pool.map(ask, jobs))
    else:
        answers = [ask(j) for j in jobs]

    per_cand: dict[str, list[QAPair]] = {c.viewpoint: [] for c in cands}
    for (q, c), a in zip(jobs, answers):
        per_cand[c.viewpoint].append(QAPair(q, a, c.viewpoint))
    menu = [
        AugmentedCandidate(i, c, describe_candidate(c, snapshot), tuple(per_cand[c.viewpoint]))
        for i, c in enumerate(cands, 1)
    ]
    return questions, menu
