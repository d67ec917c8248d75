"""Cell annotations, detections and their JSON files.

Annotation files follow::

    {"image": {"width": int, "height": int},
     "cells": [{"class": "normal|mn|nb|npb", "cx": float, "cy": float, "r": float,
                "nuclei": [{"x": float, "y": float}, {"x": float, "y": float}]}]}

Detection files carry the same circle/nuclei fields plus ``score``,
``class_id`` and ``grid_peak``; per-tile files add a top-level
``tile_index``.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

from .geometry import Circle, ScoredCircle

CLASS_NAMES = ("normal", "mn", "nb", "npb")


class AnnotationError(ValueError):
    """Schema violation in an annotation or detection file."""


class UnknownClassError(AnnotationError):
    pass


class NucleiArityError(AnnotationError):
    pass


@dataclass(frozen=True)
class Point:
    x: float
    y: float


@dataclass(frozen=True)
class CircleAnnotation:
    cls: str
    cx: float
    cy: float
    r: float
    nuclei: tuple[Point, Point]

    def __post_init__(self):
        if self.cls not in CLASS_NAMES:
            raise UnknownClassError(f"unknown class {self.cls!r}; expected one of {CLASS_NAMES}")
        if len(self.nuclei) != 2:
            raise NucleiArityError(f"a binuclear cell has exactly 2 nuclei, got {len(self.nuclei)}")
        if not (self.r > 0 and math.isfinite(self.r)):
            raise AnnotationError(f"radius must be positive and finite, got {self.r}")

    @property
    def circle(self) -> Circle:
        return Circle(self.cx, self.cy, self.r)

    def ordered_nuclei(self) -> tuple[Point, Point]:
        """Nuclei as (left, right); equal x falls back to y."""
        a, b = self.nuclei
        return (a, b) if (a.x, a.y) <= (b.x, b.y) else (b, a)

    def translated(self, dx: float, dy: float) -> "CircleAnnotation":
        return CircleAnnotation(
            self.cls,
            self.cx + dx,
            self.cy + dy,
            self.r,
            tuple(Point(p.x + dx, p.y + dy) for p in self.nuclei),
        )


@dataclass
class AnnotationSet:
    width: int
    height: int
    cells: list[CircleAnnotation] = field(default_factory=list)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise AnnotationError("image dimensions must be positive")
        for cell in self.cells:
            if not (0 <= cell.cx < self.width and 0 <= cell.cy < self.height):
                raise AnnotationError(
                    f"cell center ({cell.cx}, {cell.cy}) outside {self.width}x{self.height} image"
                )


@dataclass(frozen=True)
class Detection:
    """A decoded circle in input-pixel units with its two nuclei (left, right)."""

    circle: ScoredCircle
    nuclei: tuple[Point, Point]
    grid_peak: tuple[int, int] = (0, 0)

    @property
    def score(self) -> float:
        return self.circle.score

    @property
    def class_id(self) -> int:
        return self.circle.class_id

    def translated(self, dx: float, dy: float) -> "Detection":
        sc = self.circle
        return Detection(
            ScoredCircle(sc.circle.translated(dx, dy), sc.score, sc.class_id),
            tuple(Point(p.x + dx, p.y + dy) for p in self.nuclei),
            self.grid_peak,
        )


# -- JSON -----------------------------------------------------------------


def _number(obj, key):
    try:
        value = obj[key]
    except (KeyError, TypeError):
        raise AnnotationError(f"missing field {key!r}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise AnnotationError(f"field {key!r} must be a number")
    return float(value)


def _nuclei(obj) -> tuple[Point, Point]:
    nuclei = obj.get("nuclei") if isinstance(obj, dict) else None
    if not isinstance(nuclei, list):
        raise NucleiArityError("missing nuclei array")
    if len(nuclei) != 2:
        raise NucleiArityError(f"a binuclear cell has exactly 2 nuclei, got {len(nuclei)}")
    return tuple(Point(_number(n, "x"), _number(n, "y")) for n in nuclei)


def _point_dict(p: Point) -> dict:
    return {"x": p.x, "y": p.y}


def annotations_to_dict(annotations: AnnotationSet) -> dict:
    return {
        "image": {"width": annotations.width, "height": annotations.height},
        "cells": [
            {
                "class": c.cls,
                "cx": c.cx,
                "cy": c.cy,
                "r": c.r,
                "nuclei": [_point_dict(p) for p in c.nuclei],
            }
            for c in annotations.cells
        ],
    }


def annotations_from_dict(obj) -> AnnotationSet:
    if not isinstance(obj, dict) or not isinstance(obj.get("image"), dict):
        raise AnnotationError("missing 'image' object")
    width = obj["image"].get("width")
    height = obj["image"].get("height")
    if not isinstance(width, int) or not isinstance(height, int):
        raise AnnotationError("image width/height must be integers")
    cells_raw = obj.get("cells")
    if not isinstance(cells_raw, list):
        raise AnnotationError("missing 'cells' array")
    cells = []
    for raw in cells_raw:
        if not isinstance(raw, dict):
            raise AnnotationError("cell entries must be objects")
        cls = raw.get("class")
        if cls not in CLASS_NAMES:
            raise UnknownClassError(f"unknown class {cls!r}")
        cells.append(
            CircleAnnotation(cls, _number(raw, "cx"), _number(raw, "cy"), _number(raw, "r"), _nuclei(raw))
        )
    return AnnotationSet(width, height, cells)


def write_annotations(annotations: AnnotationSet, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        json.dump(annotations_to_dict(annotations), fh, indent=1)
        fh.write("\n")


def read_annotations(path: str | os.PathLike) -> AnnotationSet:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise AnnotationError(f"invalid JSON: {exc}") from None
    return annotations_from_dict(obj)


def detection_to_dict(det: Detection) -> dict:
    c = det.circle.circle
    cid = det.class_id
    return {
        "class_id": cid,
        "class": CLASS_NAMES[cid] if 0 <= cid < len(CLASS_NAMES) else str(cid),
        "cx": c.cx,
        "cy": c.cy,
        "r": c.r,
        "score": det.score,
        "nuclei": [_point_dict(p) for p in det.nuclei],
        "grid_peak": list(det.grid_peak),
    }


def detection_from_dict(raw) -> Detection:
    if not isinstance(raw, dict):
        raise AnnotationError("detection entries must be objects")
    cid = raw.get("class_id", 0)
    if isinstance(cid, bool) or not isinstance(cid, int):
        raise AnnotationError("class_id must be an integer")
    score = _number(raw, "score")
    if not 0.0 <= score <= 1.0:
        raise AnnotationError(f"score must be in [0, 1], got {score}")
    circle = Circle(_number(raw, "cx"), _number(raw, "cy"), _number(raw, "r"))
    peak = raw.get("grid_peak", [0, 0])
    return Detection(ScoredCircle(circle, score, cid), _nuclei(raw), (int(peak[0]), int(peak[1])))


def detections_to_dict(dets, **extra) -> dict:
    out = dict(extra)
    out["detections"] = [detection_to_dict(d) for d in dets]
    return out


def write_detections(dets, path: str | os.PathLike, **extra) -> None:
    with open(path, "w") as fh:
        json.dump(detections_to_dict(dets, **extra), fh, indent=1)
        fh.write("\n")


def read_detections(path: str | os.PathLike) -> tuple[list[Detection], dict]:
    """Return (detections, other top-level fields)."""
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise AnnotationError(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict) or not isinstance(obj.get("detections"), list):
        raise AnnotationError("missing 'detections' array")
    meta = {k: v for k, v in obj.items() if k != "detections"}
    return [detection_from_dict(d) for d in obj["detections"]], meta
