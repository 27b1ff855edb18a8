"""Model backends and the bundle the agent loop consumes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .base import CaptionBackend, ChatBackend, VQABackend
from .calllog import CallLog, CallRecord
from .http import (
    HTTPCaptionBackend,
    HTTPChatBackend,
    HTTPVQABackend,
    caption_from_env,
    chat_from_env,
    vqa_from_env,
)
from .scripted import ScriptedChat, ScriptedVQA, load_fixture
from .simulated import HeuristicChat, OraclePolicyChat, RandomPolicyChat, SimulatorVQA

BACKEND_KINDS = ("scripted", "heuristic", "http")


@dataclass
class Backends:
    """Backend handles for one run.

    ``summarizer`` and ``consolidator`` are optional chat slots; when absent the
    memory and perception modules use their deterministic templates.
    """

    chat: ChatBackend
    vqa: VQABackend
    summarizer: ChatBackend | None = None
    consolidator: ChatBackend | None = None
    captioner: CaptionBackend | None = None
    log: CallLog = field(default_factory=CallLog)


def _policy(name: str | None, seed: int, goals, log: CallLog):
    if name is None:
        return None
    if name == "random":
        return RandomPolicyChat(seed, log=log)
    if name == "heuristic":
        return HeuristicChat(seed, log=log)
    if name == "oracle":
        if goals is None:
            raise ValueError("the oracle policy needs episode goals")
        return OraclePolicyChat(goals, seed, log=log)
    raise ValueError(f"unknown fixture policy {name!r}")


def make_backends(
    kind: str,
    *,
    fixture: Mapping | None = None,
    seed: int = 0,
    goals: Mapping | None = None,
    report_distance: bool = True,
    use_segmentation: bool = True,
    summarize: str = "none",
) -> Backends:
    """Build a backend bundle sharing one call log.

    ``summarize`` selects the memory slot: ``"none"`` (template), ``"chat"``
    (same handle as the agent) or ``"http"``.
    """
    log = CallLog()
    simulator = SimulatorVQA(report_distance=report_distance, use_segmentation=use_segmentation, log=log)
    captioner = None
    if kind == "heuristic":
        chat, vqa = HeuristicChat(seed, log=log), simulator
    elif kind == "scripted":
        if fixture is None:
            raise ValueError("scripted backends need a fixture")
        fallback = _policy(fixture.get("policy"), int(fixture.get("seed", seed)), goals, log)
        chat = ScriptedChat(fixture.get("entries", {}), fallback=fallback, log=log)
        vqa = ScriptedVQA(fixture.get("vqa", {}), fallback=simulator, log=log)
    elif kind == "http":
        chat = chat_from_env(log=log)
        vqa = vqa_from_env(log=log)
        captioner = caption_from_env(log=log)
    else:
        raise ValueError(f"unknown backend kind {kind!r}; expected one of {BACKEND_KINDS}")
    summarizer = {"none": None, "chat": chat}.get(summarize)
    if summarize == "http":
        summarizer = chat_from_env(log=log)
    elif summarize not in ("none", "chat"):
        raise ValueError(f"unknown summarize slot {summarize!r}")
    return Backends(chat=chat, vqa=vqa, summarizer=summarizer, captioner=captioner, log=log)


__all__ = [
    "BACKEND_KINDS",
    "Backends",
    "CallLog",
    "CallRecord",
    "CaptionBackend",
    "ChatBackend",
    "HTTPCaptionBackend",
    "HTTPChatBackend",
    "HTTPVQABackend",
    "HeuristicChat",
    "OraclePolicyChat",
    "RandomPolicyChat",
    "ScriptedChat",
    "ScriptedVQA",
    "SimulatorVQA",
    "VQABackend",
    "load_fixture",
    "make_backends",
]
