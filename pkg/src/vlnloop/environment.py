"""Environment files: navigation graph plus the panoramic cell grid at each viewpoint.

File layout (one JSON document per scan)::

    {"scan_id": "...",
     "viewpoints": [{"id": "A", "position": [x, y, z], "cells": [<24 cells>]}],
     "edges": [["A", "B"], ["B", "C", 2.0]]}

A cell is ``{"heading": 0..315, "elevation": -30|0|30, "caption": str,
"objects": [...], "image_ref": optional path}``.  An object is either
``{"label": str, "distance": meters}`` or ``{"label": str, "bbox": [x0, y0, x1, y1],
"depth": "<pgm path>", "mask": {"size": [h, w], "rle": [...]}}`` (mask optional).
Relative paths resolve against the environment file's directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .errors import GridIncomplete, InvariantViolation, MalformedFile, SchemaViolation, UnknownViewpoint
from .navgraph import (
    NavGraph,
    Pose,
    Position,
    absolute_bearing,
    heading_sector,
    nearest_elevation,
    relative_bearing,
)
from .perception import (
    BBox,
    DepthMap,
    DirectionalCell,
    ObjectRecord,
    SegMask,
    index_grid,
    sector_heading,
)


@dataclass(frozen=True)
class Candidate:
    viewpoint: str
    rel_heading: float
    rel_elevation: float
    euclid_dist: float
    sector: int
    cell: DirectionalCell

    @property
    def sector_name(self) -> str:
        return heading_sector(self.rel_heading)[1]

    def to_dict(self) -> dict:
        return {
            "viewpoint": self.viewpoint,
            "rel_heading": round(self.rel_heading, 6),
            "rel_elevation": round(self.rel_elevation, 6),
            "euclid_dist": round(self.euclid_dist, 6),
            "cell": self.cell.ref,
        }


@dataclass(eq=False)
class Environment:
    scan_id: str
    graph: NavGraph
    cells: Mapping[str, tuple[DirectionalCell, ...]]

    def observation(self, viewpoint: str) -> tuple[DirectionalCell, ...]:
        try:
            return self.cells[viewpoint]
        except KeyError:
            raise UnknownViewpoint(viewpoint) from None

    def cell(self, viewpoint: str, heading: int, elevation: int) -> DirectionalCell:
        for c in self.observation(viewpoint):
            if c.heading == heading and c.elevation == elevation:
                return c
        raise UnknownViewpoint(f"{viewpoint}:{heading}:{elevation}")


def candidates_at(env: Environment, pose: Pose) -> list[Candidate]:
    """Navigable neighbours of the current viewpoint, nearest-to-straight-ahead first."""
    graph = env.graph
    here = graph.position(pose.viewpoint)
    grid = index_grid(env.observation(pose.viewpoint))
    out = []
    for vp in graph.neighbors(pose.viewpoint):
        there = graph.position(vp)
        rel_h, rel_e = relative_bearing(pose, here, there)
        sector = heading_sector(rel_h)[0]
        cell = grid[(sector_heading(pose, sector), nearest_elevation(rel_e))]
        out.append(Candidate(vp, rel_h, rel_e, here.distance(there), sector, cell))
    out.sort(key=lambda c: (abs(c.rel_heading), c.viewpoint))
    return out


def travel_heading(env: Environment, src: str, dst: str) -> float:
    return absolute_bearing(env.graph.position(src), env.graph.position(dst))


# -- loading -----------------------------------------------------------------


def _require(doc: dict, key: str, where: str):
    if not isinstance(doc, dict) or key not in doc:
        raise SchemaViolation(f"{where}: missing field {key!r}")
    return doc[key]


def _parse_object(doc: dict, where: str, base: Path, depth_cache: dict) -> ObjectRecord:
    label = _require(doc, "label", where)
    if "distance" in doc:
        try:
            return ObjectRecord(label, distance=float(doc["distance"]))
        except (TypeError, ValueError) as exc:
            raise InvariantViolation(where, str(exc)) from None
    bbox_raw = _require(doc, "bbox", where)
    depth_ref = _require(doc, "depth", where)
    try:
        bbox = BBox(*bbox_raw)
    except (TypeError, ValueError) as exc:
        raise InvariantViolation(where, f"bad bbox: {exc}") from None
    path = (base / depth_ref).resolve()
    if path not in depth_cache:
        try:
            depth_cache[path] = DepthMap.from_pgm(path)
        except OSError as exc:
            raise MalformedFile(f"{where}: cannot read depth map {depth_ref}: {exc}") from None
    depth = depth_cache[path]
    mask = None
    if doc.get("mask") is not None:
        try:
            mask = SegMask.from_rle(doc["mask"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvariantViolation(where, f"bad mask: {exc}") from None
        if (mask.height, mask.width) != (depth.height, depth.width):
            raise InvariantViolation(where, "mask size differs from depth map")
    if not (0 <= bbox.x0 and bbox.x1 <= depth.width and 0 <= bbox.y0 and bbox.y1 <= depth.height):
        raise InvariantViolation(where, "bbox outside depth map")
    return ObjectRecord(label, bbox=bbox, mask=mask, depth=depth, depth_ref=str(depth_ref))


def _parse_cell(doc: dict, vp: str, base: Path, depth_cache: dict) -> DirectionalCell:
    where = f"viewpoint {vp} cell"
    heading = _require(doc, "heading", where)
    elevation = _require(doc, "elevation", where)
    where = f"viewpoint {vp} cell ({heading}, {elevation})"
    objects = tuple(
        _parse_object(o, f"{where} object {i}", base, depth_cache)
        for i, o in enumerate(doc.get("objects", []))
    )
    image_ref = doc.get("image_ref")
    if image_ref is not None:
        image_ref = str((base / image_ref).resolve())
    try:
        return DirectionalCell(
            int(heading), int(elevation), doc.get("caption", ""), objects, image_ref, vp
        )
    except ValueError as exc:
        raise InvariantViolation(where, str(exc)) from None


def parse_environment(doc: dict, base: Path | str = ".") -> Environment:
    base = Path(base)
    scan_id = _require(doc, "scan_id", "environment")
    vps = _require(doc, "viewpoints", f"scan {scan_id}")
    edges = _require(doc, "edges", f"scan {scan_id}")
    positions: dict[str, Position] = {}
    cells: dict[str, tuple[DirectionalCell, ...]] = {}
    depth_cache: dict = {}
    for i, v in enumerate(vps):
        vid = _require(v, "id", f"viewpoint #{i}")
        pos = _require(v, "position", f"viewpoint {vid}")
        raw_cells = _require(v, "cells", f"viewpoint {vid}")
        if vid in positions:
            raise InvariantViolation(vid, "duplicate viewpoint id")
        try:
            positions[vid] = Position(*(float(c) for c in pos))
        except (TypeError, ValueError) as exc:
            raise InvariantViolation(vid, f"bad position: {exc}") from None
        parsed = tuple(_parse_cell(c, vid, base, depth_cache) for c in raw_cells)
        try:
            index_grid(parsed)
        except GridIncomplete as exc:
            raise InvariantViolation(vid, str(exc)) from None
        cells[vid] = parsed
    edge_list = []
    for e in edges:
        if not isinstance(e, list) or len(e) not in (2, 3):
            raise SchemaViolation(f"scan {scan_id}: edge {e!r} must be [a, b] or [a, b, length]")
        edge_list.append(tuple(e))
    return Environment(scan_id, NavGraph(positions, edge_list), cells)


def load_environment(path: str | Path) -> Environment:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise MalformedFile(f"{path}: {exc}") from None
    return parse_environment(doc, path.parent)


def load_environments(directory: str | Path) -> dict[str, Environment]:
    """Load every ``*.json`` environment in ``directory``, keyed by scan id."""
    envs = {}
    for p in sorted(Path(directory).glob("*.json")):
        env = load_environment(p)
        envs[env.scan_id] = env
    return envs


# -- writing -----------------------------------------------------------------


def _object_to_dict(obj: ObjectRecord) -> dict:
    if obj.distance is not None:
        return {"label": obj.label, "distance": obj.distance}
    out = {"label": obj.label, "bbox": obj.bbox.to_list(), "depth": obj.depth_ref}
    if obj.mask is not None:
        out["mask"] = obj.mask.to_rle()
    return out


def environment_to_dict(env: Environment) -> dict:
    """Inverse of :func:`parse_environment`; depth maps are referenced, not embedded."""
    viewpoints = []
    for vid, pos in env.graph.viewpoints.items():
        cells = []
        for c in env.cells[vid]:
            cd = {"heading": c.heading, "elevation": c.elevation, "caption": c.caption}
            if c.objects:
                cd["objects"] = [_object_to_dict(o) for o in c.objects]
            if c.image_ref:
                cd["image_ref"] = c.image_ref
            cells.append(cd)
        viewpoints.append({"id": vid, "position": [pos.x, pos.y, pos.z], "cells": cells})
    edges = [[a, b] for a, b, _ in env.graph.edges]
    return {"scan_id": env.scan_id, "viewpoints": viewpoints, "edges": edges}


def write_environment(env: Environment, path: str | Path) -> None:
    """Write the JSON document and any depth sidecars next to it."""
    path = Path(path)
    written = set()
    for cells in env.cells.values():
        for cell in cells:
            for obj in cell.objects:
                if obj.depth is None or obj.depth_ref in written:
                    continue
                target = path.parent / obj.depth_ref
                target.parent.mkdir(parents=True, exist_ok=True)
                obj.depth.to_pgm(target)
                written.add(obj.depth_ref)
    path.write_text(json.dumps(environment_to_dict(env), indent=1))

