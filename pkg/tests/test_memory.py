import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vlnloop.backends import ScriptedChat
from vlnloop.memory import (
    EMPTY_MEMORY,
    MAX_SUMMARY_CHARS,
    MemoryBank,
    MemoryEntry,
    render_memory,
    summarize_step,
)
from vlnloop.messages import FixtureKey
from vlnloop.perception import Annotation, Snapshot

SNAP = Snapshot(("a hallway",) + ("a plain wall",) * 7, (Annotation(0, "sofa", 1.2),))
KEY = FixtureKey("ep", 3, "summarize")


def _bank(n, length=40):
    bank = MemoryBank()
    for t in range(n):
        bank.append(MemoryEntry(t, (f"s{t} " + "x" * length)[:length], "B"))
    return bank


def test_fallback_template_for_stop():
    entry = summarize_step(3, SNAP, "The hallway leads on.", "", "stop")
    assert entry.summary == "Step 3: saw sofa; thought The hallway leads on.; moved to stop"
    assert entry.summary.endswith("; moved to stop")
    assert entry.action_taken == "stop"


def test_fallback_without_annotations_uses_caption():
    snap = Snapshot(("a long corridor with doors",) + ("",) * 7)
    entry = summarize_step(0, snap, "go", "", "C")
    assert entry.summary == "Step 0: saw a long corridor with doors; thought go; moved to C"


def test_scripted_summary_verbatim_and_truncated():
    chat = ScriptedChat({"ep:3:summarize": "Walked down the hall."})
    assert summarize_step(3, SNAP, "t", "menu", "C", chat, KEY).summary == "Walked down the hall."
    long = ScriptedChat({"ep:3:summarize": "y" * 600})
    entry = summarize_step(3, SNAP, "t", "menu", "C", long, KEY)
    assert len(entry.summary) == MAX_SUMMARY_CHARS == 400


def test_backend_failure_uses_template():
    chat = ScriptedChat({"ep:3:summarize": {"error": "503"}})
    entry = summarize_step(3, SNAP, "t", "", "C", chat, KEY)
    assert entry.summary.startswith("Step 3: saw sofa")


def test_bank_steps_must_increase():
    bank = _bank(2)
    with pytest.raises(ValueError):
        bank.append(MemoryEntry(1, "again", "stop"))
    assert len(bank) == 2


def test_render_empty_and_small():
    assert render_memory(MemoryBank()) == EMPTY_MEMORY == "(no prior steps)"
    text = render_memory(_bank(3, 20))
    assert [line.split(".")[0] for line in text.splitlines()] == ["0", "1", "2"]


def test_render_fifty_full_entries():
    bank = MemoryBank([MemoryEntry(t, "z" * 400, "B") for t in range(50)])
    text = render_memory(bank, 2000)
    lines = text.splitlines()
    # "(46 earlier steps elided)" (25) + 4 * ("NN. " + 400) + 4 newlines = 1645 <= 2000; 5 kept would be 2050
    assert lines[0] == "(46 earlier steps elided)"
    assert [line.split(".")[0] for line in lines[1:]] == ["46", "47", "48", "49"]
    assert len(text) == 1645


def test_render_rejects_tiny_budget():
    with pytest.raises(ValueError):
        render_memory(_bank(1), 100)


@settings(max_examples=80, deadline=None)
@given(
    lengths=st.lists(st.integers(1, 400), min_size=1, max_size=40),
    budget=st.integers(400, 3000),
)
def test_render_within_budget_and_keeps_newest(lengths, budget):
    bank = MemoryBank([MemoryEntry(t, chr(97 + t % 26) * n, "B") for t, n in enumerate(lengths)])
    text = render_memory(bank, budget)
    assert len(text) <= budget
    assert bank.entries[-1].summary in text
