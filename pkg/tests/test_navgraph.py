import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vlnloop.environment import candidates_at, load_environment, parse_environment
from vlnloop.errors import (
    CoincidentPoints,
    InvariantViolation,
    MalformedFile,
    SchemaViolation,
    UnknownViewpoint,
)
from vlnloop.navgraph import NavGraph, Pose, Position, geodesic_distance, heading_sector, relative_bearing
from vlnloop.suites import make_cells, random_graph

from oracles import brute_geodesic

import numpy as np


def test_load_line_fixture(fixture_env):
    assert set(fixture_env.graph.viewpoints) == {"A", "B", "C"}
    assert len(fixture_env.graph.edges) == 2
    assert all(len(fixture_env.observation(v)) == 24 for v in "ABC")


def test_undefined_edge_endpoint_names_it(line_doc, write_json):
    line_doc["edges"].append(["A", "Z"])
    with pytest.raises(InvariantViolation) as exc:
        load_environment(write_json(line_doc))
    assert exc.value.entity == "Z"


def test_edge_length_must_match_positions(line_doc, write_json):
    line_doc["edges"][0] = ["A", "B", 5.0]
    with pytest.raises(InvariantViolation):
        load_environment(write_json(line_doc))


def test_explicit_correct_edge_length_accepted(line_doc, write_json):
    line_doc["edges"][0] = ["A", "B", 2.0]
    env = load_environment(write_json(line_doc))
    assert env.graph.edge_length("A", "B") == 2.0


def test_wrong_cell_count(line_doc, write_json):
    line_doc["viewpoints"][1]["cells"].pop()
    with pytest.raises(InvariantViolation) as exc:
        load_environment(write_json(line_doc))
    assert exc.value.entity == "B"


def test_missing_field_and_bad_syntax(line_doc, write_json, tmp_path):
    del line_doc["viewpoints"][0]["position"]
    with pytest.raises(SchemaViolation, match="position"):
        load_environment(write_json(line_doc))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(MalformedFile):
        load_environment(bad)


def test_self_loop_rejected(line_doc):
    line_doc["edges"].append(["A", "A"])
    with pytest.raises(InvariantViolation):
        parse_environment(line_doc)


def test_fractional_bbox_rejected(line_doc):
    cell = line_doc["viewpoints"][0]["cells"][1]
    cell["objects"] = [{"label": "door", "bbox": [0.5, 0, 2, 2], "depth": "nope.pgm"}]
    with pytest.raises(InvariantViolation, match="bbox"):
        parse_environment(line_doc)


def test_geodesic_line(line_env):
    g = line_env.graph
    assert geodesic_distance(g, "A", "C") == 4.0
    assert geodesic_distance(g, "A", "A") == 0.0
    with pytest.raises(UnknownViewpoint):
        geodesic_distance(g, "A", "Q")


def test_geodesic_disconnected_is_inf():
    g = NavGraph({"A": Position(0, 0), "B": Position(1, 0), "C": Position(5, 5)}, [("A", "B")])
    assert geodesic_distance(g, "A", "C") == math.inf


def test_geodesic_matches_path_enumeration():
    rng = np.random.default_rng(7)
    g = random_graph(rng, 10, extra_edge_prob=0.3).graph
    ids = list(g.viewpoints)
    pick = random.Random(3)
    for _ in range(100):
        a, b = pick.choice(ids), pick.choice(ids)
        expected = 0.0 if a == b else brute_geodesic(g.adjacency, a, b)
        assert geodesic_distance(g, a, b) == pytest.approx(expected, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 9))
def test_geodesic_metric_properties(seed, n):
    g = random_graph(np.random.default_rng(seed), n).graph
    ids = list(g.viewpoints)
    for a in ids:
        for b in ids:
            d = geodesic_distance(g, a, b)
            assert d == pytest.approx(geodesic_distance(g, b, a), abs=1e-9)
            assert d + 1e-9 >= g.viewpoints[a].distance(g.viewpoints[b])
            for c in ids:
                assert geodesic_distance(g, a, c) <= d + geodesic_distance(g, b, c) + 1e-9


def test_relative_bearing_examples():
    here = Position(0, 0, 0)
    assert relative_bearing(Pose("A", 0), here, Position(0, 3, 0)) == (0.0, 0.0)
    assert relative_bearing(Pose("A", 90), here, Position(0, 3, 0))[0] == -90.0
    _, elev = relative_bearing(Pose("A", 0), here, Position(math.sqrt(3), 0, 1))
    assert elev == pytest.approx(30.0, abs=1e-9)
    # due south is +180, never -180
    assert relative_bearing(Pose("A", 0), here, Position(0, -1, 0))[0] == 180.0
    with pytest.raises(CoincidentPoints):
        relative_bearing(Pose("A", 0), here, here)


@pytest.mark.parametrize(
    "rel, expected",
    [(0, (0, "front")), (-90, (6, "left")), (100, (2, "right")), (22.5, (1, "front-right")),
     (22.4, (0, "front")), (180, (4, "rear")), (-180, (4, "rear")), (-45, (7, "front-left"))],
)
def test_heading_sector(rel, expected):
    assert heading_sector(rel) == expected


@given(st.floats(-1e4, 1e4, allow_nan=False), st.integers(-5, 5))
def test_heading_sector_periodic(rel, k):
    shifted = rel + 360 * k
    # skip values where adding 360k crosses a sector boundary through rounding
    if abs((rel % 45) - 22.5) > 1e-6:
        assert heading_sector(shifted) == heading_sector(rel)


def test_pose_normalizes_and_validates():
    assert Pose("A", -90).heading == 270.0
    assert Pose("A", 720).heading == 0.0
    with pytest.raises(ValueError):
        Pose("A", 0, elevation=15)


def _star_env():
    from vlnloop.environment import Environment

    pos = {"O": Position(0, 0), "N": Position(0, 2), "E": Position(2, 0), "W": Position(-2, 0), "X": Position(9, 9)}
    g = NavGraph(pos, [("O", "N"), ("O", "E"), ("O", "W")])
    return Environment("star", g, {vp: make_cells(vp) for vp in pos})


def test_candidates_order_and_determinism():
    env = _star_env()
    pose = Pose("O", 0)
    first = candidates_at(env, pose)
    assert [c.viewpoint for c in first] == ["N", "E", "W"]
    assert [c.rel_heading for c in first] == [0.0, 90.0, -90.0]
    assert candidates_at(env, pose) == first
    assert first[1].cell.heading == 90 and first[1].cell.elevation == 0


def test_candidates_isolated_and_unknown():
    env = _star_env()
    assert candidates_at(env, Pose("X", 0)) == []
    with pytest.raises(UnknownViewpoint):
        candidates_at(env, Pose("nowhere", 0))


def test_candidates_are_exactly_neighbors(fixture_env):
    rng = np.random.default_rng(1)
    envs = [fixture_env] + [random_graph(rng, n) for n in (5, 8, 12)]
    for env in envs:
        for vp in env.graph.viewpoints:
            for heading in (0, 37.5, 200):
                got = {c.viewpoint for c in candidates_at(env, Pose(vp, heading))}
                assert got == set(env.graph.neighbors(vp))
