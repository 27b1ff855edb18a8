"""Trajectory scoring (TL, NE, SR, OSR, SPL) and the batch benchmark runner."""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .agent import AgentConfig, Trajectory, run_episode
from .backends import Backends
from .environment import Environment
from .errors import EmptyInput, UnknownViewpoint
from .navgraph import geodesic_distance

log = logging.getLogger(__name__)

SUCCESS_RADIUS = 3.0


@dataclass(frozen=True)
class Episode:
    path_id: int
    scan: str
    instructions: tuple[str, ...]
    path: tuple[str, ...]
    heading: float = 0.0

    def __post_init__(self):
        if not self.path:
            raise ValueError(f"episode {self.path_id}: empty ground-truth path")
        if not self.instructions:
            raise ValueError(f"episode {self.path_id}: no instructions")

    @property
    def start(self) -> str:
        return self.path[0]

    @property
    def goal(self) -> str:
        return self.path[-1]

    @classmethod
    def from_dict(cls, doc: dict) -> Episode:
        return cls(
            path_id=int(doc["path_id"]),
            scan=str(doc["scan"]),
            instructions=tuple(doc["instructions"]),
            path=tuple(doc["path"]),
            heading=float(doc.get("heading", 0.0)),
        )

    def to_dict(self) -> dict:
        return {
            "path_id": self.path_id,
            "scan": self.scan,
            "heading": self.heading,
            "instructions": list(self.instructions),
            "path": list(self.path),
        }

    def validate(self, env: Environment) -> None:
        for vp in self.path:
            env.graph.position(vp)
        for a, b in zip(self.path, self.path[1:]):
            if not env.graph.has_edge(a, b):
                raise ValueError(f"episode {self.path_id}: ground-truth hop {a}->{b} is not an edge")


def load_episodes(path: str | Path) -> list[Episode]:
    docs = json.loads(Path(path).read_text())
    return [Episode.from_dict(d) for d in docs]


def write_episodes(episodes: Iterable[Episode], path: str | Path) -> None:
    Path(path).write_text(json.dumps([e.to_dict() for e in episodes], indent=1))


@dataclass(frozen=True)
class EpisodeMetrics:
    TL: float
    NE: float
    success: int
    oracle_success: int
    SPL: float

    def to_dict(self) -> dict:
        # an unreachable goal is stored as null
        return {
            "TL": self.TL,
            "NE": self.NE if math.isfinite(self.NE) else None,
            "success": self.success,
            "oracle_success": self.oracle_success,
            "SPL": self.SPL,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> EpisodeMetrics:
        ne = doc["NE"]
        return cls(doc["TL"], math.inf if ne is None else ne, doc["success"], doc["oracle_success"], doc["SPL"])


@dataclass(frozen=True)
class BenchmarkSummary:
    episodes: int
    TL: float
    NE: float
    OSR: float
    SR: float
    SPL: float

    def to_dict(self) -> dict:
        return {
            "episodes": self.episodes,
            "TL": self.TL,
            "NE": self.NE if math.isfinite(self.NE) else None,
            "OSR": self.OSR,
            "SR": self.SR,
            "SPL": self.SPL,
        }

    def table(self, label: str = "base") -> str:
        """Aligned TL / NE / OSR / SR / SPL table."""
        header = f"{'Setting':<24} {'TL':>7} {'NE':>7} {'OSR':>6} {'SR':>6} {'SPL':>6}"
        row = (f"{label:<24} {self.TL:>7.2f} {self.NE:>7.2f} {self.OSR:>6.1f} "
               f"{self.SR:>6.1f} {self.SPL:>6.1f}")
        return header + "\n" + row


def path_length(env: Environment, visited: Sequence[str]) -> float:
    return sum(env.graph.edge_length(a, b) for a, b in zip(visited, visited[1:]))


def score_trajectory(env: Environment, episode: Episode, visited: Sequence[str]) -> EpisodeMetrics:
    """Score the viewpoint sequence an agent visited against the episode goal."""
    if not visited or visited[0] != episode.start:
        raise ValueError(f"trajectory must start at {episode.start}")
    graph = env.graph
    for vp in visited:
        graph.position(vp)
    goal = episode.goal
    if goal not in graph.viewpoints:
        raise UnknownViewpoint(goal)
    tl = path_length(env, visited)
    ne = geodesic_distance(graph, visited[-1], goal)
    success = int(ne < SUCCESS_RADIUS)
    oracle = int(min(geodesic_distance(graph, v, goal) for v in visited) < SUCCESS_RADIUS)
    shortest = geodesic_distance(graph, episode.start, goal)
    if shortest == 0:
        spl = float(success)
    elif success:
        spl = shortest / max(tl, shortest)
    else:
        spl = 0.0
    return EpisodeMetrics(tl, ne, success, oracle, spl)


def aggregate(ms: Sequence[EpisodeMetrics]) -> BenchmarkSummary:
    """Means over episodes; OSR, SR and SPL are reported as percentages."""
    if not ms:
        raise EmptyInput("cannot aggregate an empty metric list")
    n = len(ms)
    return BenchmarkSummary(
        episodes=n,
        TL=math.fsum(m.TL for m in ms) / n,
        NE=math.fsum(m.NE for m in ms) / n,
        OSR=100.0 * sum(m.oracle_success for m in ms) / n,
        SR=100.0 * sum(m.success for m in ms) / n,
        SPL=100.0 * math.fsum(m.SPL for m in ms) / n,
    )


def episode_record(episode: Episode, instruction_index: int, traj: Trajectory, metrics: EpisodeMetrics) -> dict:
    return {
        "path_id": episode.path_id,
        "scan": episode.scan,
        "instruction_index": instruction_index,
        "visited": list(traj.visited),
        "actions": list(traj.actions),
        "termination": traj.termination,
        "error": traj.error,
        "metrics": metrics.to_dict(),
        "steps": [s.to_dict() for s in traj.steps],
    }


def _dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, ensure_ascii=False)


def run_benchmark(
    envs: Mapping[str, Environment],
    episodes: Sequence[Episode],
    cfg: AgentConfig,
    backends: Backends | Callable[[], Backends],
    out: str | Path | None = None,
    *,
    parallel: int = 1,
    first_instruction_only: bool = False,
    run_info: Mapping | None = None,
) -> tuple[BenchmarkSummary, list[dict]]:
    """Run and score every (episode, instruction) pair; optionally write JSONL results.

    Records are written in input order whatever ``parallel`` is, followed by a
    ``{"summary": ..., "config": ...}`` line.
    """
    for ep in episodes:
        if ep.scan not in envs:
            raise ValueError(f"episode {ep.path_id}: no environment for scan {ep.scan!r}")
        ep.validate(envs[ep.scan])
    jobs = [
        (ep, i)
        for ep in episodes
        for i in range(1 if first_instruction_only else len(ep.instructions))
    ]
    shared = backends if isinstance(backends, Backends) else None

    def one(job: tuple[Episode, int]) -> dict:
        ep, i = job
        env = envs[ep.scan]
        traj = run_episode(env, ep, cfg, shared or backends(), i)
        return episode_record(ep, i, traj, score_trajectory(env, ep, traj.visited))

    if parallel > 1:
        with ThreadPoolExecutor(parallel) as pool:
            records = list(pool.map(one, jobs))
    else:
        records = [one(j) for j in jobs]
    if not records:
        raise EmptyInput("no episodes to run")
    summary = aggregate([EpisodeMetrics.from_dict(r["metrics"]) for r in records])
    if out is not None:
        config = {"agent": cfg.to_dict(), "label": cfg.label, **(run_info or {})}
        with open(out, "w", encoding="utf-8") as fh:
            for r in records:
                fh.write(_dumps(r) + "\n")
            fh.write(_dumps({"summary": summary.to_dict(), "config": config}) + "\n")
    return summary, records


def read_results(path: str | Path) -> tuple[list[dict], dict | None]:
    """Episode records and the trailing summary record (None if absent)."""
    records, summary = [], None
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        doc = json.loads(line)
        if "summary" in doc:
            summary = doc
        else:
            records.append(doc)
    return records, summary


def audit_results(
    envs: Mapping[str, Environment],
    episodes: Sequence[Episode],
    records: Sequence[dict],
    tol: float = 1e-9,
) -> list[str]:
    """Recompute metrics for each record; returns one message per mismatch."""
    by_id = {ep.path_id: ep for ep in episodes}
    problems = []
    for r in records:
        ep = by_id.get(r["path_id"])
        if ep is None:
            problems.append(f"path_id {r['path_id']}: not in episodes file")
            continue
        fresh = score_trajectory(envs[ep.scan], ep, r["visited"]).to_dict()
        stored = r["metrics"]
        for name, value in fresh.items():
            old = stored.get(name)
            same = (old is None and value is None) or (
                old is not None and value is not None and abs(old - value) <= tol
            )
            if not same:
                problems.append(f"path_id {r['path_id']}: {name} stored {old} recomputed {value}")
    return problems
