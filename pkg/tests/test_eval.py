import json
import math

import numpy as np
import pytest

from vlnloop.agent import AgentConfig
from vlnloop.backends import make_backends
from vlnloop.errors import EmptyInput, UnknownViewpoint
from vlnloop.eval import (
    Episode,
    EpisodeMetrics,
    aggregate,
    audit_results,
    load_episodes,
    read_results,
    run_benchmark,
    score_trajectory,
    write_episodes,
)
from vlnloop.navgraph import NavGraph, Position
from vlnloop.environment import Environment
from vlnloop.suites import make_cells, random_graph

from oracles import brute_metrics


def _ep(path, pid=1):
    return Episode(pid, "line", ("go",), tuple(path))


def test_score_exact_shortest_path(line_env):
    m = score_trajectory(line_env, _ep("ABC"), ["A", "B", "C"])
    assert (m.TL, m.NE, m.success, m.oracle_success, m.SPL) == (4.0, 0.0, 1, 1, 1.0)


def test_score_stop_at_start(line_env):
    m = score_trajectory(line_env, _ep("ABC"), ["A"])
    assert m.NE == 4.0 and m.success == 0 and m.oracle_success == 0 and m.SPL == 0.0


def test_score_detour_is_discounted():
    # A-B-C line plus a spur B-D; going A,B,D,B,C is 8 m for a 4 m shortest path
    pos = {"A": Position(0, 0), "B": Position(0, 2), "C": Position(0, 4), "D": Position(2, 2)}
    env = Environment("spur", NavGraph(pos, [("A", "B"), ("B", "C"), ("B", "D")]), {v: make_cells(v) for v in pos})
    m = score_trajectory(env, Episode(1, "spur", ("go",), ("A", "B", "C")), ["A", "B", "D", "B", "C"])
    assert m.TL == 8.0 and m.success == 1 and m.SPL == 0.5


def test_score_near_goal_counts_as_success(line_env):
    # ending 2 m short of the goal is within 3 m
    m = score_trajectory(line_env, _ep("ABC"), ["A", "B"])
    assert m.NE == 2.0 and m.success == 1 and m.SPL == 1.0


def test_score_oracle_success_without_success():
    pos = {v: Position(0, 4.0 * i) for i, v in enumerate("ABCD")}
    env = Environment("long", NavGraph(pos, [("A", "B"), ("B", "C"), ("C", "D")]), {v: make_cells(v) for v in pos})
    m = score_trajectory(env, Episode(1, "long", ("go",), ("A", "B", "C")), ["A", "B", "C", "D"])
    assert m.NE == 4.0 and m.success == 0 and m.oracle_success == 1 and m.SPL == 0.0


def test_score_start_equals_goal(line_env):
    m = score_trajectory(line_env, _ep("B"), ["B"])
    assert m.SPL == 1.0 and m.success == 1 and m.TL == 0.0


def test_score_unreachable_goal():
    pos = {"A": Position(0, 0), "B": Position(0, 2), "C": Position(9, 9)}
    env = Environment("split", NavGraph(pos, [("A", "B")]), {v: make_cells(v) for v in pos})
    m = score_trajectory(env, Episode(1, "split", ("go",), ("A", "B", "C")), ["A", "B"])
    assert m.NE == math.inf and m.success == 0 and m.SPL == 0.0
    assert m.to_dict()["NE"] is None
    assert EpisodeMetrics.from_dict(m.to_dict()) == m


def test_score_rejects_bad_trajectories(line_env):
    with pytest.raises(ValueError):
        score_trajectory(line_env, _ep("ABC"), ["B", "C"])
    with pytest.raises(UnknownViewpoint):
        score_trajectory(line_env, _ep("ABC"), ["A", "Q"])


def test_score_matches_brute_force():
    rng = np.random.default_rng(4)
    for g in range(40):
        env = random_graph(rng, int(rng.integers(3, 9)), 0.3)
        ids = list(env.graph.viewpoints)
        adj = env.graph.adjacency
        start, goal = (str(x) for x in rng.choice(ids, 2, replace=False))
        visited = [start]
        for _ in range(int(rng.integers(0, 6))):
            visited.append(str(rng.choice(sorted(adj[visited[-1]]))))
        ep = Episode(g, env.scan_id, ("go",), (start, goal))
        m = score_trajectory(env, ep, visited)
        pos = {v: (p.x, p.y, p.z) for v, p in env.graph.viewpoints.items()}
        tl, ne, s, o, spl = brute_metrics(adj, pos, visited, start, goal)
        assert m.TL == pytest.approx(tl, abs=1e-9)
        assert m.NE == pytest.approx(ne, abs=1e-9)
        assert (m.success, m.oracle_success) == (s, o)
        assert m.SPL == pytest.approx(spl, abs=1e-9)
        assert 0.0 <= m.SPL <= m.success


def test_aggregate_percentages():
    ms = [EpisodeMetrics(4.0, 0.0, 1, 1, 1.0), EpisodeMetrics(2.0, 5.0, 0, 1, 0.0)]
    s = aggregate(ms)
    assert (s.episodes, s.TL, s.NE, s.OSR, s.SR, s.SPL) == (2, 3.0, 2.5, 100.0, 50.0, 50.0)
    with pytest.raises(EmptyInput):
        aggregate([])
    table = s.table("w/o QAI")
    assert table.splitlines()[1].split()[:3] == ["w/o", "QAI", "3.00"]


def test_episode_io_roundtrip(tmp_path, fixture_episodes):
    write_episodes(fixture_episodes, tmp_path / "e.json")
    assert load_episodes(tmp_path / "e.json") == fixture_episodes
    assert fixture_episodes[1].start == "C" and fixture_episodes[1].goal == "A"
    with pytest.raises(ValueError):
        Episode(1, "line", (), ("A",))


def test_benchmark_results_file(tmp_path, fixture_env, fixture_episodes):
    out = tmp_path / "r.jsonl"
    goals = {f"{e.path_id}_{i}": (fixture_env, e.goal) for e in fixture_episodes for i in range(len(e.instructions))}
    backends = make_backends("scripted", fixture={"entries": {}, "policy": "oracle"}, goals=goals)
    summary, records = run_benchmark({"line": fixture_env}, fixture_episodes, AgentConfig(), backends, out)
    assert [(r["path_id"], r["instruction_index"]) for r in records] == [(1, 0), (2, 0), (2, 1), (3, 0)]
    assert summary.SR == 100.0 and summary.SPL == 100.0
    lines = out.read_text().splitlines()
    assert len(lines) == 5
    tail = json.loads(lines[-1])
    assert tail["config"]["label"] == "base" and tail["summary"]["episodes"] == 4
    back, stored = read_results(out)
    assert back == records and stored == tail
    assert audit_results({"line": fixture_env}, fixture_episodes, back) == []


def test_benchmark_first_instruction_only(fixture_env, fixture_episodes):
    _, records = run_benchmark({"line": fixture_env}, fixture_episodes, AgentConfig(),
                               make_backends("heuristic"), first_instruction_only=True)
    assert len(records) == 3


def test_benchmark_parallel_same_records(fixture_env, fixture_episodes):
    envs = {"line": fixture_env}
    a = run_benchmark(envs, fixture_episodes, AgentConfig(), make_backends("heuristic"))[1]
    b = run_benchmark(envs, fixture_episodes, AgentConfig(), lambda: make_backends("heuristic"), parallel=4)[1]
    assert a == b


def test_benchmark_validates_episodes(fixture_env):
    with pytest.raises(ValueError, match="scan"):
        run_benchmark({"line": fixture_env}, [Episode(1, "nowhere", ("go",), ("A",))], AgentConfig(),
                      make_backends("heuristic"))
    with pytest.raises(ValueError, match="not an edge"):
        run_benchmark({"line": fixture_env}, [Episode(1, "line", ("go",), ("A", "C"))], AgentConfig(),
                      make_backends("heuristic"))


def test_audit_flags_tampered_metrics(fixture_env, fixture_episodes):
    _, records = run_benchmark({"line": fixture_env}, fixture_episodes, AgentConfig(), make_backends("heuristic"))
    records[0]["metrics"]["SPL"] = 0.123
    problems = audit_results({"line": fixture_env}, fixture_episodes, records)
    assert len(problems) == 1 and "SPL" in problems[0]
