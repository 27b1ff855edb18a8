"""No-model backends: a keyword VQA over ground-truth annotations and rule-based chat policies.

These read the same prompts a real LLM would receive, so they exercise the
full loop offline. Randomness is derived from ``(seed, fixture key)`` only,
which keeps runs reproducible regardless of thread scheduling.
"""

from __future__ import annotations

import hashlib
import math
import random
import re
import time
from typing import Mapping, Sequence

from ..messages import ChatMessage, FixtureKey
from ..navgraph import geodesic_distance
from ..perception import DirectionalCell, estimate_distance
from ..prompts import find_field, parse_menu
from .base import LoggedBackend, phase_of
from .calllog import CallLog

STOPWORDS = frozenset(
    """
    a about after again ahead all along an and any are around as asks at away back be before
    behind between by can closer closest continue do down each enter exit far farther farthest
    find first for forward from further go head here i in inside instruction into is it its
    just keep landmarks left look match me more move my near nearer nearest next now of on once
    one onto or out outside over past prefer right room second should side so stop straight
    take than that the then there this through to toward towards turn until up very wait walk
    way when where which while with you your
    """.split()
)
NEAR_WORDS = frozenset({"closer", "closest", "nearer", "nearest"})
FAR_WORDS = frozenset({"farther", "farthest", "further", "furthest"})


def tokens(text: str) -> list[str]:
    return re.findall(r"[a-z]+", text.lower())


def keywords(text: str) -> list[str]:
    """Content words of ``text`` in first-occurrence order."""
    seen: dict[str, None] = {}
    for tok in tokens(text):
        if tok not in STOPWORDS and len(tok) > 1:
            seen.setdefault(tok, None)
    return list(seen)


def _mentions(word: str, text_tokens: set[str]) -> bool:
    return word in text_tokens or word + "s" in text_tokens or (word.endswith("s") and word[:-1] in text_tokens)


def keyed_rng(seed: int, key: FixtureKey | None, salt: str = "") -> random.Random:
    ident = str(key) if key is not None else hashlib.sha256(salt.encode()).hexdigest()
    return random.Random(f"{seed}|{ident}")


class SimulatorVQA(LoggedBackend):
    """Answers from a cell's object annotations by whole-word label matching."""

    slot = "vqa"

    def __init__(self, *, report_distance: bool = True, use_segmentation: bool = True,
                 log: CallLog | None = None):
        super().__init__(log)
        self.report_distance = report_distance
        self.use_segmentation = use_segmentation

    def vqa(self, cell: DirectionalCell, question: str, *, key: FixtureKey | None = None) -> str:
        started = time.perf_counter()
        if not question:
            raise ValueError("question must be non-empty")
        hits = []
        for order, obj in enumerate(cell.objects):
            if re.search(rf"\b{re.escape(obj.label)}\b", question, flags=re.IGNORECASE):
                d = estimate_distance(obj, self.use_segmentation)
                hits.append((math.inf if d is None else d, order, obj.label))
        self._record("vqa", key, cell.ref, started)
        if not hits:
            return "no"
        d, _, label = min(hits)
        if self.report_distance and math.isfinite(d):
            return f"yes, a {label} is visible ({d:.1f} m away)"
        return f"yes, a {label} is visible"


class _RuleChat(LoggedBackend):
    slot = "chat"

    def __init__(self, seed: int = 0, log: CallLog | None = None):
        super().__init__(log)
        self.seed = seed

    def chat(self, messages: Sequence[ChatMessage], *, key: FixtureKey | None = None) -> str:
        started = time.perf_counter()
        if not messages:
            raise ValueError("chat needs at least one message")
        phase = phase_of(key) or self._guess_phase(messages[-1].content)
        reply = getattr(self, f"_{phase}")(messages, key)
        self._record(phase, key, type(self).__name__, started)
        return reply

    @staticmethod
    def _guess_phase(prompt: str) -> str:
        if prompt.rstrip().endswith("Thought:"):
            return "think"
        if prompt.rstrip().endswith("Questions:"):
            return "questions"
        if prompt.rstrip().endswith("Summary:"):
            return "summarize"
        if prompt.rstrip().endswith("Merged description:"):
            return "consolidate"
        return "act"

    @staticmethod
    def _instruction(messages: Sequence[ChatMessage]) -> str:
        for m in messages:
            found = find_field(m.content, "Instruction")
            if found:
                return found
        return ""

    @staticmethod
    def _last_user(messages: Sequence[ChatMessage]) -> str:
        for m in reversed(messages):
            if m.role == "user":
                return m.content
        return messages[-1].content

    def _questions(self, messages, key) -> str:
        prompt = self._last_user(messages)
        thought = prompt.split("Thought:", 1)[-1].split("Questions:", 1)[0]
        words = keywords(thought)
        return "\n".join(f"{i}. Is there a {w}?" for i, w in enumerate(words, 1))

    def _consolidate(self, messages, key) -> str:
        prompt = self._last_user(messages)
        parts = [find_field(prompt, name) for name in ("Up", "Ahead", "Down")]
        return "; ".join(dict.fromkeys(p for p in parts if p))

    def _summarize(self, messages, key) -> str:
        prompt = self._last_user(messages)
        action = find_field(prompt, "Action taken") or "unknown"
        thought = find_field(prompt, "Thought") or ""
        return f"Thought: {thought[:120]} Moved to {action}."


class HeuristicChat(_RuleChat):
    """Token-overlap policy.

    Thinks by listing the instruction's landmark words, asks one question per
    landmark, and moves to the candidate whose description and positive QA
    answers mention the most landmarks. Ties go to the nearest/farthest
    annotated landmark when the instruction says so, otherwise to a seeded
    coin flip. Stops when no candidate mentions any landmark.
    """

    def _think(self, messages, key) -> str:
        instruction = self._instruction(messages)
        words = keywords(instruction)
        thought = "Landmarks to look for: " + (", ".join(words) if words else "none") + "."
        toks = set(tokens(instruction))
        if toks & NEAR_WORDS:
            thought += " Prefer the nearest match."
        elif toks & FAR_WORDS:
            thought += " Prefer the farthest match."
        return thought

    def _act(self, messages, key) -> str:
        instruction = self._instruction(messages)
        words = keywords(instruction)
        toks = set(tokens(instruction))
        menu = parse_menu(self._last_user(messages))
        if not menu:
            # re-prompt after a format reminder: the menu sits in an earlier turn
            for m in reversed(messages):
                menu = parse_menu(m.content)
                if menu:
                    break
        scored = []
        for item in menu:
            evidence = item.text + " " + " ".join(a for _, a in item.qa if a.lower().startswith("yes"))
            ev_tokens = set(tokens(evidence))
            hits = [w for w in words if _mentions(w, ev_tokens)]
            scored.append((len(hits), hits, item))
        best = max((s for s, _, _ in scored), default=0)
        if best == 0:
            return "No candidate matches the instruction; I am done.\nAction: 0"
        top = [(hits, item) for s, hits, item in scored if s == best]
        if len(top) > 1 and toks & (NEAR_WORDS | FAR_WORDS):
            near = bool(toks & NEAR_WORDS)
            ranked = []
            for hits, item in top:
                ds = [d for label, d in item.objects() if any(_mentions(w, set(tokens(label))) for w in hits)]
                if ds:
                    ranked.append((min(ds) if near else -max(ds), hits, item))
            if ranked:
                target = min(r[0] for r in ranked)
                top = [(hits, item) for v, hits, item in ranked if v == target]
        if len(top) > 1:
            rng = keyed_rng(self.seed, key, self._last_user(messages))
            top = [rng.choice(top)]
        hits, item = top[0]
        return f"Candidate {item.index} mentions {', '.join(hits)}.\nAction: {item.index}"


class RandomPolicyChat(_RuleChat):
    """Uniform random choice over the menu including stop."""

    def _think(self, messages, key) -> str:
        return "I will explore."

    def _questions(self, messages, key) -> str:
        return "1. What is visible in this direction?"

    def _act(self, messages, key) -> str:
        n = len(parse_menu(self._last_user(messages)))
        rng = keyed_rng(self.seed, key, self._last_user(messages))
        return f"Action: {rng.randint(0, n)}"


class OraclePolicyChat(_RuleChat):
    """Follows a shortest path to the episode goal and stops on arrival.

    ``goals`` maps episode id (as used in fixture keys) to ``(env, goal_viewpoint)``.
    """

    def __init__(self, goals: Mapping[str, tuple], seed: int = 0, log: CallLog | None = None):
        super().__init__(seed, log)
        self.goals = goals

    def _think(self, messages, key) -> str:
        return "Following the shortest route."

    def _questions(self, messages, key) -> str:
        return "1. Is the goal visible?"

    def _act(self, messages, key) -> str:
        env, goal = self.goals[key.episode]
        prompt = self._last_user(messages)
        here = find_field(prompt, "Current viewpoint")
        if here == goal:
            return "Action: 0"
        menu = parse_menu(prompt)
        graph = env.graph
        best = min(
            menu,
            key=lambda it: graph.edge_length(here, it.viewpoint) + geodesic_distance(graph, it.viewpoint, goal),
        )
        return f"Action: {best.index}"
