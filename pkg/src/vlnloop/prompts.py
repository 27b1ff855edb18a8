"""Prompt templates and the text grammar shared by the agent and its backends.

The no-model backends read prompts through the same markers an LLM would,
so any change here must keep ``parse_menu`` and friends in sync.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

TASK_SETUP = """You are a navigation agent in an indoor building. The building is a graph of viewpoints; at every step you stand on one viewpoint and may move to an adjacent one or stop. Your goal is to follow the navigation instruction and stop as close as possible to where it ends."""

MODULE_PERCEPTION = """- Visual Perception: describes the eight directions around you (front, front-right, right, rear-right, rear, rear-left, left, front-left)."""
MODULE_DISTANCE = """  Objects within 3 meters are listed with their estimated distance."""
MODULE_QAI = """- Question Answering: after you write a Thought, visual questions derived from it are asked about every candidate viewpoint and the answers are listed under that candidate."""
MODULE_MEMORY = """- Trajectory Memory: a short summary of each previous step, oldest first."""

IO_FORMAT = """Each step has two turns. When the prompt ends with "Thought:", reply with one short paragraph reasoning about which part of the instruction you are on and what you expect to see next. When shown the candidate list, pick one candidate by number, or 0 to stop, and end your reply with a line "Action: <number>"."""

OBSERVATION_TEMPLATE = """Current viewpoint: {viewpoint}
Observation:
{observation}

Thought:"""

ACT_TEMPLATE = """Current viewpoint: {viewpoint}
Thought: {thought}

Candidates:
{menu}
0. stop

Choose the next viewpoint. End your reply with a line "Action: <number>"."""

ACT_REMINDER = """Your reply did not contain a valid action ({reason}). Reply with a single line "Action: <number>" where the number is between 0 and {n}; 0 means stop."""

QUESTION_TEMPLATE = """A navigation agent wrote the following thought while deciding where to go. Write up to {max_q} short visual questions that would check the landmarks it is looking for in a candidate direction. Reply with a numbered list, one question per line.

Thought: {thought}

Questions:"""

SUMMARY_TEMPLATE = """Summarize this navigation step for the agent's memory in at most two sentences: what was seen, what the agent reasoned, and where it moved.

Observation:
{observation}

Thought: {thought}

Candidates:
{menu}

Action taken: {action}

Summary:"""

FALLBACK_QUESTION = "What objects and pathways are visible in this direction?"

_MENU_ITEM = re.compile(r"^(\d+)\. \[([^\]]+)\] (.*)$")
_QA_LINE = re.compile(r"^\s+Q: (.*?) A: (.*)$")
_OBJECTS = re.compile(r"\[objects: ([^\]]*)\]")
_OBJECT_ENTRY = re.compile(r"^(.*\S) (\d+(?:\.\d+)?) m$")


@dataclass
class MenuItem:
    index: int
    viewpoint: str
    text: str
    qa: list[tuple[str, str]] = field(default_factory=list)

    def objects(self) -> list[tuple[str, float]]:
        out = []
        for block in _OBJECTS.findall(self.text):
            for entry in block.split("; "):
                m = _OBJECT_ENTRY.match(entry.strip())
                if m:
                    out.append((m.group(1), float(m.group(2))))
        return out


def parse_menu(prompt: str) -> list[MenuItem]:
    """Recover the numbered candidate list from an action prompt."""
    items: list[MenuItem] = []
    in_menu = False
    for line in prompt.splitlines():
        if line.strip() == "Candidates:":
            in_menu, items = True, []
            continue
        if not in_menu:
            continue
        if line.strip() == "0. stop" or not line.strip():
            in_menu = False
            continue
        m = _MENU_ITEM.match(line)
        if m:
            items.append(MenuItem(int(m.group(1)), m.group(2), m.group(3)))
            continue
        q = _QA_LINE.match(line)
        if q and items:
            items[-1].qa.append((q.group(1), q.group(2)))
    return items


def find_field(text: str, name: str) -> str | None:
    """Value of the last ``name: value`` line in ``text``."""
    found = None
    for line in text.splitlines():
        if line.startswith(name + ":"):
            found = line[len(name) + 1 :].strip()
    return found
