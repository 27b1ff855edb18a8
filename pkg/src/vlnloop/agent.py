"""The think / interact / act loop over one navigation episode.

Per step::

    snapshot  = build_snapshot(panorama)                 # textual observation
    thought   = think(preamble, snapshot)                # LLM reasoning
    menu      = investigate_candidates(thought, cands)   # QA-enriched candidates
    action    = act(preamble, thought, menu)             # LLM picks a candidate or stops
    memory   += summarize_step(...)                      # compressed history
"""

from __future__ import annotations

import logging
import re
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .backends import Backends
from .environment import Environment, candidates_at, travel_heading
from .errors import ActionParseError, FixtureMiss, VLNError
from .interaction import (
    AugmentedCandidate,
    Thought,
    bare_menu,
    investigate_candidates,
    render_menu,
)
from .memory import MemoryBank, render_memory, summarize_step
from .messages import ChatMessage, FixtureKey
from .navgraph import Pose
from .perception import PerceptionOptions, Snapshot, build_snapshot
from .prompts import (
    ACT_REMINDER,
    ACT_TEMPLATE,
    IO_FORMAT,
    MODULE_DISTANCE,
    MODULE_MEMORY,
    MODULE_PERCEPTION,
    MODULE_QAI,
    OBSERVATION_TEMPLATE,
    TASK_SETUP,
)

log = logging.getLogger(__name__)

NO_THOUGHT = "(no thought)"
_ACTION_LINE = re.compile(r"\baction\s*:\s*(.*)$", re.IGNORECASE)
_ACTION_TOKEN = re.compile(r"^\**\s*(stop|[+-]?\d+)\b", re.IGNORECASE)


@dataclass(frozen=True)
class AgentConfig:
    max_steps: int = 15
    max_q: int = 3
    qai_enabled: bool = True
    include_distances: bool = True
    use_segmentation: bool = True
    memory_budget: int = 2000
    parse_retries: int = 2
    temperature: float = 0.0
    qa_workers: int = 1

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.max_q < 1:
            raise ValueError("max_q must be at least 1")
        if self.parse_retries < 0:
            raise ValueError("parse_retries must be non-negative")

    @property
    def perception(self) -> PerceptionOptions:
        return PerceptionOptions(self.include_distances, self.use_segmentation)

    @property
    def label(self) -> str:
        """Ablation row name: ``base`` or e.g. ``w/o QAI, w/o dis``."""
        parts = []
        if not self.qai_enabled:
            parts.append("w/o QAI")
        if not self.include_distances:
            parts.append("w/o dis")
        if not self.use_segmentation:
            parts.append("w/o seg")
        return ", ".join(parts) or "base"

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Action:
    """``index`` 0 means stop; otherwise a 1-based menu position."""

    index: int
    viewpoint: str | None = None

    @property
    def is_stop(self) -> bool:
        return self.index == 0

    def __str__(self) -> str:
        return "stop" if self.is_stop else str(self.viewpoint)


STOP = Action(0)


@dataclass
class StepLog:
    step: int
    viewpoint: str
    snapshot: str
    thought: str
    questions: list[str]
    qa: list[dict]
    menu: str
    raw_outputs: list[str]
    action: str
    parse_retries: int
    memory: dict

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Trajectory:
    episode_id: str
    visited: list[str]
    actions: list[str] = field(default_factory=list)
    steps: list[StepLog] = field(default_factory=list)
    termination: str = "MaxSteps"
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "episode_id": self.episode_id,
            "visited": list(self.visited),
            "actions": list(self.actions),
            "termination": self.termination,
            "error": self.error,
            "steps": [s.to_dict() for s in self.steps],
        }


def build_preamble(task_desc: str | None, instruction: str, bank: MemoryBank, cfg: AgentConfig) -> list[str]:
    """Three prompt sections: task setup with module intro and format, instruction, memory."""
    if not instruction.strip():
        raise ValueError("instruction must be non-empty")
    modules = [MODULE_PERCEPTION]
    if cfg.include_distances:
        modules.append(MODULE_DISTANCE)
    if cfg.qai_enabled:
        modules.append(MODULE_QAI)
    modules.append(MODULE_MEMORY)
    setup = "\n\n".join([task_desc or TASK_SETUP, "Modules:\n" + "\n".join(modules), IO_FORMAT])
    return [setup, instruction.strip(), render_memory(bank, cfg.memory_budget)]


def preamble_text(sections: Sequence[str]) -> str:
    setup, instruction, memory = sections
    return f"{setup}\n\nInstruction: {instruction}\n\nMemory:\n{memory}"


def think(snapshot: Snapshot, preamble: Sequence[str], chat, viewpoint: str = "",
          key: FixtureKey | None = None) -> Thought:
    messages = [
        ChatMessage("system", preamble_text(preamble)),
        ChatMessage("user", OBSERVATION_TEMPLATE.format(viewpoint=viewpoint, observation=snapshot.render())),
    ]
    step = key.step if key else 0
    for attempt in range(2):
        text = chat.chat(messages, key=key.with_phase("think", attempt) if key else None).strip()
        if text:
            return Thought(step, text)
    log.warning("empty thought twice at step %d", step)
    return Thought(step, NO_THOUGHT)


def parse_action(raw: str, n_candidates: int) -> Action:
    """Parse the last ``Action: <n|stop>`` line. Raises ActionParseError."""
    found = None
    for line in raw.splitlines():
        m = _ACTION_LINE.search(line)
        if m:
            found = m.group(1).strip()
    if found is None:
        raise ActionParseError("NoActionLine")
    tok = _ACTION_TOKEN.match(found)
    if tok is None:
        raise ActionParseError("NotANumber", found)
    value = tok.group(1).lower()
    if value == "stop":
        return STOP
    index = int(value)
    if index == 0:
        return STOP
    if not 1 <= index <= n_candidates:
        raise ActionParseError("OutOfRange", f"{index} not in 0..{n_candidates}")
    return Action(index)


def act(menu: Sequence[AugmentedCandidate], preamble: Sequence[str], chat, cfg: AgentConfig,
        thought: Thought | None = None, viewpoint: str = "",
        key: FixtureKey | None = None) -> tuple[Action, list[str], int]:
    """Ask for an action; returns ``(action, raw replies, re-prompts used)``."""
    if not menu:
        raise ValueError("act needs a non-empty menu")
    messages = [
        ChatMessage("system", preamble_text(preamble)),
        ChatMessage("user", ACT_TEMPLATE.format(
            viewpoint=viewpoint,
            thought=thought.text if thought else NO_THOUGHT,
            menu=render_menu(menu),
        )),
    ]
    raws: list[str] = []
    for attempt in range(cfg.parse_retries + 1):
        raw = chat.chat(messages, key=key.with_phase("act", attempt) if key else None)
        raws.append(raw)
        try:
            action = parse_action(raw, len(menu))
        except ActionParseError as exc:
            messages += [
                ChatMessage("assistant", raw),
                ChatMessage("user", ACT_REMINDER.format(reason=exc.reason, n=len(menu))),
            ]
            continue
        if not action.is_stop:
            action = Action(action.index, menu[action.index - 1].candidate.viewpoint)
        return action, raws, attempt
    log.warning("no parseable action after %d retries; stopping", cfg.parse_retries)
    return STOP, raws, cfg.parse_retries


def run_episode(
    env: Environment,
    episode,
    cfg: AgentConfig,
    backends: Backends,
    instruction_index: int = 0,
) -> Trajectory:
    """Run one instruction of ``episode`` to termination.

    Backend and environment failures end the episode with ``termination="Error"``
    and keep the visited prefix; fixture misses propagate.
    """
    instruction = episode.instructions[instruction_index]
    episode_id = f"{episode.path_id}_{instruction_index}"
    traj = Trajectory(episode_id, [episode.start])
    bank = MemoryBank()
    try:
        pose = Pose(episode.start, episode.heading, 0)
        env.graph.position(pose.viewpoint)
        if not instruction.strip():
            raise ValueError("instruction must be non-empty")
    except (VLNError, ValueError) as exc:
        traj.termination, traj.error = "Error", str(exc)
        return traj

    try:
        for step in range(cfg.max_steps):
            key = FixtureKey(episode_id, step, "think")
            snapshot = build_snapshot(
                env.observation(pose.viewpoint), pose, cfg.perception,
                chat=backends.consolidator, captioner=backends.captioner, key=key,
            )
            cands = candidates_at(env, pose)
            preamble = build_preamble(None, instruction, bank, cfg)
            questions: list[str] = []
            menu: list[AugmentedCandidate] = []
            raws: list[str] = []
            retries = 0
            if not cands:
                thought = Thought(step, "(no navigable candidates)")
                action = STOP
            else:
                thought = think(snapshot, preamble, backends.chat, pose.viewpoint, key)
                if cfg.qai_enabled:
                    questions, menu = investigate_candidates(
                        thought, cands, snapshot, backends.chat, backends.vqa,
                        max_q=cfg.max_q, key=key, workers=cfg.qa_workers,
                    )
                else:
                    menu = bare_menu(cands, snapshot)
                action, raws, retries = act(menu, preamble, backends.chat, cfg, thought, pose.viewpoint, key)
            menu_text = render_menu(menu)
            entry = summarize_step(
                step, snapshot, thought.text, menu_text, str(action),
                backends.summarizer, key.with_phase("summarize"),
            )
            bank.append(entry)
            traj.steps.append(StepLog(
                step=step,
                viewpoint=pose.viewpoint,
                snapshot=snapshot.render(),
                thought=thought.text,
                questions=questions,
                qa=[p.to_dict() for item in menu for p in item.qa],
                menu=menu_text,
                raw_outputs=raws,
                action=str(action),
                parse_retries=retries,
                memory=entry.to_dict(),
            ))
            traj.actions.append(str(action))
            if action.is_stop:
                traj.termination = "Stopped"
                break
            heading = travel_heading(env, pose.viewpoint, action.viewpoint)
            pose = Pose(action.viewpoint, heading, 0)
            traj.visited.append(action.viewpoint)
        else:
            traj.termination = "MaxSteps"
    except FixtureMiss:
        raise
    except VLNError as exc:
        log.warning("episode %s failed: %s", episode_id, exc)
        traj.termination, traj.error = "Error", f"{type(exc).__name__}: {exc}"
    return traj

