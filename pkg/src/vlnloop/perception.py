"""Visual perception: depth-based object distances and the textual snapshot.

The snapshot turns the 24-cell panoramic grid at a viewpoint into eight
direction descriptions (one per 45-degree sector relative to the agent) plus
a list of objects within reach, each annotated with its estimated distance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np
from PIL import Image

from .errors import (
    DimensionMismatch,
    GridIncomplete,
    InvalidCenterDepth,
    NoValidPixels,
    PerceptionError,
)
from .messages import ChatMessage, FixtureKey
from .navgraph import ELEVATIONS, SECTOR_NAMES, Pose, heading_sector

log = logging.getLogger(__name__)

MAX_OBJECT_DISTANCE = 3.0
CELL_HEADINGS = tuple(range(0, 360, 45))
ELEVATION_WORDS = {30: "up", 0: "ahead", -30: "down"}

CONSOLIDATE_PROMPT = """Three photos were taken in the same horizontal direction: tilted up 30 degrees, straight ahead, and tilted down 30 degrees. Merge their captions into one short paragraph describing that direction. Do not invent objects that are not mentioned.

Up: {up}
Ahead: {ahead}
Down: {down}

Merged description:"""


class _Chat(Protocol):
    def chat(self, messages: Sequence[ChatMessage], *, key: FixtureKey | None = None) -> str: ...


class _Captioner(Protocol):
    def caption(self, image_ref: str) -> str: ...


class DepthMap:
    """Row-major depth image in meters; values <= 0 or non-finite are invalid."""

    def __init__(self, values):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"depth map must be a non-empty 2-D grid, got shape {arr.shape}")
        self.values = arr
        self.values.setflags(write=False)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def valid(self) -> np.ndarray:
        return np.isfinite(self.values) & (self.values > 0)

    @classmethod
    def from_pgm(cls, path: str | Path) -> DepthMap:
        """Read a 16-bit P5 PGM whose values are millimeters (0 = invalid)."""
        with Image.open(path) as im:
            mm = np.array(im, dtype=np.float64)
        return cls(mm / 1000.0)

    def to_pgm(self, path: str | Path) -> None:
        mm = np.where(self.valid(), np.rint(self.values * 1000.0), 0)
        Image.fromarray(np.clip(mm, 0, 65535).astype(np.uint16)).save(path)


@dataclass(frozen=True)
class BBox:
    """Pixel box; (x0, y0) inclusive, (x1, y1) exclusive."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        for v in (self.x0, self.y0, self.x1, self.y1):
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise ValueError(f"bbox coordinates must be integers, got {v!r}")
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError(f"empty bbox {self}")

    def check_within(self, width: int, height: int) -> None:
        if not (0 <= self.x0 < self.x1 <= width and 0 <= self.y0 < self.y1 <= height):
            raise DimensionMismatch(f"{self} outside {width}x{height} image")

    @property
    def center(self) -> tuple[int, int]:
        return (self.x0 + self.x1) // 2, (self.y0 + self.y1) // 2

    def to_list(self) -> list[int]:
        return [int(self.x0), int(self.y0), int(self.x1), int(self.y1)]


class SegMask:
    """Binary instance mask with row-major run-length encoding."""

    def __init__(self, bits):
        arr = np.asarray(bits, dtype=bool)
        if arr.ndim != 2:
            raise ValueError("mask must be 2-D")
        self.bits = arr
        self.bits.setflags(write=False)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @classmethod
    def from_rle(cls, doc: dict) -> SegMask:
        """Decode ``{"size": [h, w], "rle": [zeros, ones, zeros, ...]}``."""
        h, w = (int(v) for v in doc["size"])
        counts = [int(c) for c in doc["rle"]]
        if any(c < 0 for c in counts):
            raise ValueError("negative run length")
        if sum(counts) != h * w:
            raise ValueError(f"run lengths sum to {sum(counts)}, expected {h * w}")
        values = np.arange(len(counts)) % 2 == 1
        return cls(np.repeat(values, counts).reshape(h, w))

    def to_rle(self) -> dict:
        flat = self.bits.ravel()
        change = np.flatnonzero(np.diff(flat.astype(np.int8))) + 1
        bounds = np.concatenate(([0], change, [flat.size]))
        counts = np.diff(bounds).tolist()
        if flat.size and flat[0]:
            counts.insert(0, 0)
        return {"size": [self.height, self.width], "rle": counts}


@dataclass(frozen=True)
class ObjectRecord:
    """A labelled object with either a precomputed distance or raw depth inputs."""

    label: str
    distance: float | None = None
    bbox: BBox | None = None
    mask: SegMask | None = field(default=None, compare=False)
    depth: DepthMap | None = field(default=None, compare=False, repr=False)
    depth_ref: str | None = None

    def __post_init__(self):
        if not self.label:
            raise ValueError("object label must be non-empty")
        has_raw = self.bbox is not None
        if (self.distance is None) == (not has_raw):
            raise ValueError(f"object {self.label!r} needs exactly one of distance or bbox+depth")
        if self.distance is not None and not (self.distance > 0 and math.isfinite(self.distance)):
            raise ValueError(f"object {self.label!r} distance must be positive")
        if has_raw and self.depth is None:
            raise ValueError(f"object {self.label!r} has a bbox but no depth map")


@dataclass(frozen=True)
class DirectionalCell:
    heading: int
    elevation: int
    caption: str = ""
    objects: tuple[ObjectRecord, ...] = ()
    image_ref: str | None = None
    viewpoint: str = ""

    def __post_init__(self):
        if self.heading not in CELL_HEADINGS:
            raise ValueError(f"cell heading must be a multiple of 45 in [0, 360), got {self.heading}")
        if self.elevation not in ELEVATIONS:
            raise ValueError(f"cell elevation must be one of {ELEVATIONS}, got {self.elevation}")
        if not self.caption and not self.image_ref:
            raise ValueError("a cell without a caption needs an image_ref")

    @property
    def ref(self) -> str:
        return f"{self.viewpoint}:{self.heading}:{self.elevation}"


@dataclass(frozen=True)
class Annotation:
    sector: int
    label: str
    distance: float


@dataclass(frozen=True)
class PerceptionOptions:
    include_distances: bool = True
    use_segmentation: bool = True
    max_distance: float = MAX_OBJECT_DISTANCE


@dataclass(frozen=True)
class Snapshot:
    """Eight sector descriptions (index 0 = straight ahead, clockwise) plus object distances."""

    descriptions: tuple[str, ...]
    annotations: tuple[Annotation, ...] = ()
    distances_included: bool = True

    def __post_init__(self):
        if len(self.descriptions) != 8:
            raise ValueError("a snapshot has exactly 8 sector descriptions")

    def sector_text(self, sector: int) -> str:
        text = self.descriptions[sector] or "nothing notable"
        objs = [a for a in self.annotations if a.sector == sector]
        if objs:
            text += " [objects: " + "; ".join(f"{a.label} {a.distance:.1f} m" for a in objs) + "]"
        return text

    def render(self) -> str:
        return "\n".join(f"{SECTOR_NAMES[i]}: {self.sector_text(i)}" for i in range(8))


def object_distance_masked(depth: DepthMap, bbox: BBox, mask: SegMask) -> float:
    """Mean depth over pixels inside ``bbox`` that are set in ``mask`` and valid."""
    if (mask.height, mask.width) != (depth.height, depth.width):
        raise DimensionMismatch(
            f"mask {mask.width}x{mask.height} vs depth {depth.width}x{depth.height}"
        )
    bbox.check_within(depth.width, depth.height)
    window = np.s_[bbox.y0 : bbox.y1, bbox.x0 : bbox.x1]
    selected = mask.bits[window] & depth.valid()[window]
    if not selected.any():
        raise NoValidPixels(f"no valid masked depth inside {bbox}")
    return float(depth.values[window][selected].mean())


def object_distance_center(depth: DepthMap, bbox: BBox) -> float:
    """Depth at the bbox center pixel (the no-segmentation variant)."""
    bbox.check_within(depth.width, depth.height)
    cx, cy = bbox.center
    value = float(depth.values[cy, cx])
    if not (math.isfinite(value) and value > 0):
        raise InvalidCenterDepth(f"invalid depth {value} at ({cx}, {cy})")
    return value


def estimate_distance(obj: ObjectRecord, use_segmentation: bool = True) -> float | None:
    """Distance of ``obj`` or None when it cannot be estimated.

    Objects without a mask fall back to the center-point estimate.
    """
    if obj.distance is not None:
        return obj.distance
    try:
        if use_segmentation and obj.mask is not None:
            return object_distance_masked(obj.depth, obj.bbox, obj.mask)
        return object_distance_center(obj.depth, obj.bbox)
    except PerceptionError as exc:
        log.debug("dropping object %s: %s", obj.label, exc)
        return None


def consolidate_vertical(
    cells: Sequence[DirectionalCell],
    chat: _Chat | None = None,
    key: FixtureKey | None = None,
) -> str:
    """Merge the up/ahead/down captions of one heading into a single description."""
    if len({c.heading for c in cells}) != 1 or sorted(c.elevation for c in cells) != [-30, 0, 30]:
        raise GridIncomplete("consolidation needs the three elevations of a single heading")
    by_elev = {c.elevation: c.caption.strip() for c in cells}
    if chat is not None:
        prompt = CONSOLIDATE_PROMPT.format(up=by_elev[30], ahead=by_elev[0], down=by_elev[-30])
        return chat.chat([ChatMessage("user", prompt)], key=key).strip()

    parts: list[tuple[str, str]] = []
    seen: set[str] = set()
    for elev in (30, 0, -30):
        text = by_elev[elev]
        if text and text not in seen:
            seen.add(text)
            parts.append((ELEVATION_WORDS[elev], text))
    if len(parts) == 1:
        return parts[0][1]
    return "; ".join(f"{word}: {text}" for word, text in parts)


def index_grid(obs: Sequence[DirectionalCell]) -> dict[tuple[int, int], DirectionalCell]:
    grid = {(c.heading, c.elevation): c for c in obs}
    if len(obs) != 24 or len(grid) != 24:
        raise GridIncomplete(f"expected 24 distinct cells, got {len(obs)} ({len(grid)} distinct)")
    return grid


def sector_heading(pose: Pose, sector: int) -> int:
    """Absolute cell heading that best covers ``sector`` for an agent in ``pose``."""
    return heading_sector(pose.heading + 45 * sector)[0] * 45


def build_snapshot(
    obs: Sequence[DirectionalCell],
    pose: Pose,
    opts: PerceptionOptions = PerceptionOptions(),
    chat: _Chat | None = None,
    captioner: _Captioner | None = None,
    key: FixtureKey | None = None,
) -> Snapshot:
    """Textual observation of the panorama at ``pose``.

    ``chat`` (optional) merges vertical captions; ``captioner`` fills captions
    for cells that only carry an ``image_ref``.
    """
    grid = index_grid(obs)
    descriptions = []
    annotations = []
    for sector in range(8):
        heading = sector_heading(pose, sector)
        column = [grid[(heading, e)] for e in (30, 0, -30)]
        if captioner is not None:
            column = [
                replace(c, caption=captioner.caption(c.image_ref)) if not c.caption else c
                for c in column
            ]
        sub_key = key.with_phase("consolidate", sector) if key is not None and chat is not None else None
        descriptions.append(consolidate_vertical(column, chat, sub_key))
        if not opts.include_distances:
            continue
        for cell in column:
            for obj in cell.objects:
                d = estimate_distance(obj, opts.use_segmentation)
                if d is None or d > opts.max_distance:
                    continue
                annotations.append(Annotation(sector, obj.label, d))
    return Snapshot(tuple(descriptions), tuple(annotations), opts.include_distances)


__all__ = [
    "Annotation",
    "BBox",
    "DepthMap",
    "DirectionalCell",
    "ObjectRecord",
    "PerceptionOptions",
    "SegMask",
    "Snapshot",
    "build_snapshot",
    "consolidate_vertical",
    "estimate_distance",
    "object_distance_center",
    "object_distance_masked",
]
