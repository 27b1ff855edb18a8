"""Navigation graph, agent pose and bearing geometry.

Conventions: x points east, y north, z up, all in meters.  Headings are
degrees clockwise from +y (north), so a heading of 90 faces east.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import CoincidentPoints, InvariantViolation, UnknownViewpoint

EDGE_TOLERANCE = 1e-6
ELEVATIONS = (-30, 0, 30)
SECTOR_NAMES = (
    "front",
    "front-right",
    "right",
    "rear-right",
    "rear",
    "rear-left",
    "left",
    "front-left",
)


@dataclass(frozen=True)
class Position:
    x: float
    y: float
    z: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError(f"non-finite position {self}")

    def distance(self, other: Position) -> float:
        return math.dist((self.x, self.y, self.z), (other.x, other.y, other.z))


def normalize_heading(deg: float) -> float:
    """Map any angle onto [0, 360)."""
    h = math.fmod(deg, 360.0)
    if h < 0:
        h += 360.0
    # fmod of a tiny negative number can round up to exactly 360
    return 0.0 if h >= 360.0 else h


def wrap_relative(deg: float) -> float:
    """Map any angle onto (-180, 180]."""
    r = normalize_heading(deg)
    return r - 360.0 if r > 180.0 else r


@dataclass(frozen=True)
class Pose:
    viewpoint: str
    heading: float = 0.0
    elevation: int = 0

    def __post_init__(self):
        if not math.isfinite(self.heading):
            raise ValueError("heading must be finite")
        object.__setattr__(self, "heading", normalize_heading(self.heading))
        if self.elevation not in ELEVATIONS:
            raise ValueError(f"elevation must be one of {ELEVATIONS}, got {self.elevation}")


def relative_bearing(pose: Pose, src: Position, dst: Position) -> tuple[float, float]:
    """Heading and elevation of ``dst`` as seen from ``src`` by an agent in ``pose``.

    Returns ``(rel_heading, rel_elevation)`` with rel_heading in (-180, 180].
    """
    dx, dy, dz = dst.x - src.x, dst.y - src.y, dst.z - src.z
    if dx == 0 and dy == 0 and dz == 0:
        raise CoincidentPoints(f"{src} and {dst} coincide")
    bearing = normalize_heading(math.degrees(math.atan2(dx, dy)))
    rel_heading = wrap_relative(bearing - pose.heading)
    rel_elevation = math.degrees(math.atan2(dz, math.hypot(dx, dy)))
    return rel_heading, rel_elevation


def absolute_bearing(src: Position, dst: Position) -> float:
    dx, dy = dst.x - src.x, dst.y - src.y
    if dx == 0 and dy == 0 and dst.z == src.z:
        raise CoincidentPoints(f"{src} and {dst} coincide")
    return normalize_heading(math.degrees(math.atan2(dx, dy)))


def heading_sector(rel_heading: float) -> tuple[int, str]:
    """Nearest 45-degree sector; an exact 22.5-degree tie goes to the next sector up."""
    idx = math.floor(normalize_heading(rel_heading) / 45.0 + 0.5) % 8
    return idx, SECTOR_NAMES[idx]


def nearest_elevation(deg: float) -> int:
    return min(ELEVATIONS, key=lambda e: (abs(e - deg), e))


@dataclass(eq=False)
class NavGraph:
    """Undirected, Euclidean-weighted viewpoint graph.

    ``edges`` may carry an explicit length as a third element; it must match
    the distance between the endpoint positions.
    """

    viewpoints: Mapping[str, Position]
    adjacency: dict[str, dict[str, float]] = field(init=False, repr=False)
    _sssp: dict[str, dict[str, float]] = field(init=False, repr=False, default_factory=dict)

    def __init__(self, viewpoints: Mapping[str, Position], edges: Iterable[tuple] = ()):
        self.viewpoints = dict(viewpoints)
        self.adjacency = {vp: {} for vp in self.viewpoints}
        self._sssp = {}
        for edge in edges:
            self._add_edge(*edge)

    def _add_edge(self, a: str, b: str, length: float | None = None) -> None:
        for end in (a, b):
            if end not in self.viewpoints:
                raise InvariantViolation(end, "edge endpoint is not a viewpoint")
        if a == b:
            raise InvariantViolation(a, "self-loop")
        euclid = self.viewpoints[a].distance(self.viewpoints[b])
        if euclid <= 0:
            raise InvariantViolation(f"{a}-{b}", "edge endpoints share a position")
        if length is not None and abs(length - euclid) > EDGE_TOLERANCE:
            raise InvariantViolation(
                f"{a}-{b}", f"edge length {length} differs from euclidean {euclid:.6f}"
            )
        self.adjacency[a][b] = euclid
        self.adjacency[b][a] = euclid

    @property
    def edges(self) -> list[tuple[str, str, float]]:
        return sorted((a, b, d) for a, nbrs in self.adjacency.items() for b, d in nbrs.items() if a < b)

    def neighbors(self, vp: str) -> dict[str, float]:
        try:
            return self.adjacency[vp]
        except KeyError:
            raise UnknownViewpoint(vp) from None

    def position(self, vp: str) -> Position:
        try:
            return self.viewpoints[vp]
        except KeyError:
            raise UnknownViewpoint(vp) from None

    def has_edge(self, a: str, b: str) -> bool:
        return b in self.adjacency.get(a, ())

    def edge_length(self, a: str, b: str) -> float:
        try:
            return self.adjacency[a][b]
        except KeyError:
            raise InvariantViolation(f"{a}-{b}", "no such edge") from None

    def shortest_from(self, source: str) -> dict[str, float]:
        """Dijkstra distances from ``source``; unreachable viewpoints are absent."""
        if source not in self.adjacency:
            raise UnknownViewpoint(source)
        cached = self._sssp.get(source)
        if cached is not None:
            return cached
        dist = {source: 0.0}
        heap = [(0.0, source)]
        done = set()
        while heap:
            d, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            for v, w in self.adjacency[u].items():
                nd = d + w
                if nd < dist.get(v, math.inf):
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        self._sssp[source] = dist
        return dist


def geodesic_distance(graph: NavGraph, a: str, b: str) -> float:
    """Shortest edge-path length; ``math.inf`` when ``b`` is unreachable from ``a``."""
    if b not in graph.viewpoints:
        raise UnknownViewpoint(b)
    return graph.shortest_from(a).get(b, math.inf)
