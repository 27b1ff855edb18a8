"""Synthetic environments and episode suites for tests, demos and ablations.

``qai_suite`` and ``distance_suite`` build two-junction worlds where the two
forward candidates at each junction look identical in their captions. In the
QAI suite the right branch differs only by a landmark object more than 3 m
away (invisible to the snapshot, visible to the simulator VQA); in the
distance suite it differs only by how close its door is.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .environment import Environment, write_environment
from .eval import Episode, write_episodes
from .navgraph import NavGraph, Position, normalize_heading
from .perception import CELL_HEADINGS, BBox, DepthMap, DirectionalCell, ObjectRecord, SegMask

CEILING = "a white ceiling"
FLOOR = "a tiled floor"
WALL = "a plain wall"

LANDMARKS = (
    "piano", "fireplace", "aquarium", "bookshelf", "statue", "bathtub", "painting",
    "staircase", "refrigerator", "chandelier", "treadmill", "wardrobe", "mirror", "fountain",
)
DISTRACTORS = ("lamp", "plant", "chair", "vase")


@dataclass
class Suite:
    envs: dict[str, Environment]
    episodes: list[Episode]

    def goals(self) -> dict[str, tuple[Environment, str]]:
        """Episode-id → (env, goal) map for the oracle policy."""
        return {
            f"{ep.path_id}_{i}": (self.envs[ep.scan], ep.goal)
            for ep in self.episodes
            for i in range(len(ep.instructions))
        }

    def write(self, directory: str | Path) -> tuple[Path, Path]:
        """Write ``envs/<scan>.json`` (with depth sidecars) and ``episodes.json``."""
        root = Path(directory)
        env_dir = root / "envs"
        env_dir.mkdir(parents=True, exist_ok=True)
        for scan, env in self.envs.items():
            write_environment(env, env_dir / f"{scan}.json")
        eps = root / "episodes.json"
        write_episodes(self.episodes, eps)
        return env_dir, eps


def offset(p: Position, bearing: float, dist: float) -> Position:
    b = math.radians(bearing)
    return Position(round(p.x + dist * math.sin(b), 9), round(p.y + dist * math.cos(b), 9), p.z)


def make_cells(
    viewpoint: str,
    ahead: Mapping[int, str] | None = None,
    objects: Mapping[int, Sequence[ObjectRecord]] | None = None,
    default: str = WALL,
) -> tuple[DirectionalCell, ...]:
    """24 cells; ``ahead``/``objects`` are keyed by absolute heading for the level ring."""
    ahead = ahead or {}
    objects = objects or {}
    cells = []
    for h in CELL_HEADINGS:
        cells.append(DirectionalCell(h, 30, CEILING, viewpoint=viewpoint))
        cells.append(DirectionalCell(h, 0, ahead.get(h, default), tuple(objects.get(h, ())), viewpoint=viewpoint))
        cells.append(DirectionalCell(h, -30, FLOOR, viewpoint=viewpoint))
    return tuple(cells)


def line_environment(spacing: float = 2.0, scan_id: str = "line") -> Environment:
    """A - B - C along +y; each viewpoint sees 'a hallway' ahead and a sofa 1.2 m north."""
    pos = {"A": Position(0, 0), "B": Position(0, spacing), "C": Position(0, 2 * spacing)}
    graph = NavGraph(pos, [("A", "B"), ("B", "C")])
    cells = {
        vp: make_cells(vp, {0: "a hallway"}, {0: [ObjectRecord("sofa", distance=1.2)]})
        for vp in pos
    }
    return Environment(scan_id, graph, cells)


def shortest_path(graph: NavGraph, start: str, goal: str) -> list[str]:
    dist = graph.shortest_from(start)
    if goal not in dist:
        raise ValueError(f"{goal} unreachable from {start}")
    path = [goal]
    while path[-1] != start:
        v = path[-1]
        path.append(min(
            (u for u, w in graph.neighbors(v).items() if u in dist and abs(dist[u] + w - dist[v]) < 1e-9),
            key=lambda u: (dist[u], u),
        ))
    return path[::-1]


def random_graph(rng: np.random.Generator, n: int, extra_edge_prob: float = 0.2,
                 scan_id: str = "rand") -> Environment:
    """Connected graph on ``n`` distinct jittered grid points with a random spanning tree."""
    side = int(math.ceil(math.sqrt(n))) + 2
    slots = rng.choice(side * side, size=n, replace=False)
    pos = {}
    for i, s in enumerate(slots):
        jitter = rng.uniform(-0.4, 0.4, size=2)
        pos[f"v{i}"] = Position(
            round(2.0 * (s % side) + jitter[0], 6), round(2.0 * (s // side) + jitter[1], 6), 0.0
        )
    ids = list(pos)
    edges = set()
    for i in range(1, n):
        j = int(rng.integers(0, i))
        edges.add((ids[j], ids[i]))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < extra_edge_prob:
                edges.add((ids[i], ids[j]))
    graph = NavGraph(pos, sorted(edges))
    labels = rng.choice(LANDMARKS + DISTRACTORS, size=n)
    cells = {
        vp: make_cells(vp, {0: f"a corridor near {labels[k]}"},
                       {0: [ObjectRecord(str(labels[k]), distance=float(rng.uniform(0.5, 4.0)))]})
        for k, vp in enumerate(ids)
    }
    return Environment(scan_id, graph, cells)


def random_suite(seed: int, n_graphs: int, min_nodes: int = 5, max_nodes: int = 15,
                 episodes_per_graph: int = 1, extra_edge_prob: float = 0.2) -> Suite:
    """Random connected graphs with shortest-path ground truth between random endpoints."""
    rng = np.random.default_rng(seed)
    envs, episodes = {}, []
    for g in range(n_graphs):
        n = int(rng.integers(min_nodes, max_nodes + 1))
        env = random_graph(rng, n, extra_edge_prob, scan_id=f"rand{g:03d}")
        envs[env.scan_id] = env
        ids = list(env.graph.viewpoints)
        for _ in range(episodes_per_graph):
            start, goal = (str(v) for v in rng.choice(ids, size=2, replace=False))
            episodes.append(Episode(
                path_id=len(episodes),
                scan=env.scan_id,
                instructions=(f"Walk from {start} towards the {rng.choice(LANDMARKS)}.",),
                path=tuple(shortest_path(env.graph, start, goal)),
                heading=float(rng.uniform(0, 360)),
            ))
    return Suite(envs, episodes)


def _open_door(distance: float, ref: str, background: float = 4.0, size: int = 16) -> ObjectRecord:
    """A door frame whose bbox center looks through the opening onto ``background``."""
    depth = np.full((size, size), background)
    frame = np.zeros((size, size), dtype=bool)
    frame[2:14, 2:14] = True
    frame[4:14, 4:12] = False
    depth[frame] = distance
    return ObjectRecord("door", bbox=BBox(2, 2, 14, 14), mask=SegMask(frame), depth=DepthMap(depth), depth_ref=ref)


def _two_junction_world(scan: str, theta: float, picks: tuple[int, int], edge: float,
                        ahead_caption: str, right_objects, wrong_objects) -> tuple[Environment, tuple[str, ...]]:
    """S -> (J | D1) -> (G | D2); ``picks[k]`` selects which side (-1/+1) is correct at junction k."""
    pos = {"S": Position(0.0, 0.0)}
    ahead: dict[str, dict[int, str]] = {}
    objs: dict[str, dict[int, list]] = {}
    edges = []
    here, heading = "S", theta
    names = (("J", "D1"), ("G", "D2"))
    for k, side in enumerate(picks):
        right_name, wrong_name = names[k]
        for sign, name in ((side, right_name), (-side, wrong_name)):
            bearing = normalize_heading(heading + 45 * sign)
            pos[name] = offset(pos[here], bearing, edge)
            edges.append((here, name))
            h = int(round(bearing)) % 360
            ahead.setdefault(here, {})[h] = ahead_caption
            source = right_objects if name == right_name else wrong_objects
            objs.setdefault(here, {})[h] = list(source(k, name))
        heading = normalize_heading(heading + 45 * side)
        here = right_name
    graph = NavGraph(pos, edges)
    cells = {vp: make_cells(vp, ahead.get(vp), objs.get(vp)) for vp in pos}
    return Environment(scan, graph, cells), ("S", "J", "G")


def qai_suite(n: int = 20, seed: int = 0, edge: float = 2 * math.sqrt(2)) -> Suite:
    """Look-alike doorways; only VQA on a far landmark (4.5 m) reveals the right branch."""
    rng = np.random.default_rng(seed)
    envs, episodes = {}, []
    for i in range(n):
        first, second = (str(x) for x in rng.choice(LANDMARKS, size=2, replace=False))
        distractor = str(rng.choice(DISTRACTORS))
        theta = 45.0 * int(rng.integers(0, 8))
        picks = tuple(int(x) for x in rng.choice([-1, 1], size=2))
        landmarks = (first, second)
        env, path = _two_junction_world(
            f"qai{i:02d}", theta, picks, edge, "an open doorway",
            right_objects=lambda k, name: [ObjectRecord(landmarks[k], distance=4.5)],
            wrong_objects=lambda k, name: [ObjectRecord(distractor, distance=4.5)],
        )
        envs[env.scan_id] = env
        episodes.append(Episode(
            path_id=i,
            scan=env.scan_id,
            instructions=(f"Go through the doorway past the {first}, then through the doorway to the {second}.",),
            path=path,
            heading=theta,
        ))
    return Suite(envs, episodes)


def distance_suite(n: int = 20, seed: int = 0, edge: float = 2 * math.sqrt(2)) -> Suite:
    """Look-alike doors at equal step length; the right one is the closer door.

    Odd episodes use raw depth + mask door objects (open door frames), even
    ones precomputed distances.
    """
    rng = np.random.default_rng(seed)
    envs, episodes = {}, []
    for i in range(n):
        theta = 45.0 * int(rng.integers(0, 8))
        picks = tuple(int(x) for x in rng.choice([-1, 1], size=2))
        near = [round(float(rng.uniform(1.0, 1.8)), 3) for _ in range(2)]
        far = [round(float(rng.uniform(2.2, 2.9)), 3) for _ in range(2)]
        raw = i % 2 == 1
        scan = f"dist{i:02d}"

        def door(d: float, name: str) -> list[ObjectRecord]:
            if raw:
                return [_open_door(d, f"depth/{scan}_{name}.pgm")]
            return [ObjectRecord("door", distance=d)]

        env, path = _two_junction_world(
            scan, theta, picks, edge, "a wooden door",
            right_objects=lambda k, name: door(near[k], name),
            wrong_objects=lambda k, name: door(far[k], name),
        )
        envs[scan] = env
        episodes.append(Episode(
            path_id=i,
            scan=scan,
            instructions=("Go through the closer door, then through the closer door again.",),
            path=path,
            heading=theta,
        ))
    return Suite(envs, episodes)


def oracle_fixture() -> dict:
    return {"entries": {}, "policy": "oracle"}


def random_fixture(seed: int = 0) -> dict:
    return {"entries": {}, "policy": "random", "seed": seed}


def write_fixture(doc: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True))

