"""Circle primitives, analytic circle IoU and greedy circle NMS."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

DEFAULT_NMS_IOU = 0.5


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    r: float

    @property
    def area(self) -> float:
        return math.pi * self.r * self.r

    def translated(self, dx: float, dy: float) -> "Circle":
        return Circle(self.cx + dx, self.cy + dy, self.r)


@dataclass(frozen=True)
class ScoredCircle:
    circle: Circle
    score: float
    class_id: int = 0

    def sort_key(self):
        """Descending score, then (class_id, cx, cy, r) for ties."""
        c = self.circle
        return (-self.score, self.class_id, c.cx, c.cy, c.r)


def _lens_area(r1: float, r2: float, d: float) -> float:
    # caller guarantees |r1 - r2| < d < r1 + r2
    if r1 > r2:
        # fixed operand order keeps the result bit-identical under swapping
        r1, r2 = r2, r1
    a1 = (d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)
    a2 = (d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)
    a1 = min(1.0, max(-1.0, a1))
    a2 = min(1.0, max(-1.0, a2))
    k = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)
    return r1 * r1 * math.acos(a1) + r2 * r2 * math.acos(a2) - 0.5 * math.sqrt(max(k, 0.0))


def intersection_area(a: Circle, b: Circle) -> float:
    r1, r2 = a.r, b.r
    if r1 <= 0.0 or r2 <= 0.0:
        return 0.0
    d = math.hypot(a.cx - b.cx, a.cy - b.cy)
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        return math.pi * min(r1, r2) ** 2
    return _lens_area(r1, r2, d)


def circle_iou(a: Circle, b: Circle) -> float:
    """Intersection over union of two circles, in [0, 1].

    Degenerate circles (r == 0) give 0, including two coincident points.
    """
    r1, r2 = a.r, b.r
    if r1 <= 0.0 or r2 <= 0.0:
        return 0.0
    d = math.hypot(a.cx - b.cx, a.cy - b.cy)
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        lo, hi = (r1, r2) if r1 <= r2 else (r2, r1)
        return (lo / hi) ** 2
    lo, hi = (r1, r2) if r1 <= r2 else (r2, r1)
    inter = _lens_area(lo, hi, d)
    union = math.pi * (lo * lo + hi * hi) - inter
    return min(1.0, max(0.0, inter / union))


def nms_indices(
    candidates: Sequence[ScoredCircle],
    iou_threshold: float = DEFAULT_NMS_IOU,
    per_class: bool = True,
) -> list[int]:
    """Indices of survivors of greedy NMS, in descending score order."""
    if not 0.0 < iou_threshold < 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1), got {iou_threshold}")
    order = sorted(range(len(candidates)), key=lambda i: candidates[i].sort_key())
    keep: list[int] = []
    for i in order:
        cand = candidates[i]
        suppressed = False
        for j in keep:
            kept = candidates[j]
            if per_class and kept.class_id != cand.class_id:
                continue
            if circle_iou(kept.circle, cand.circle) > iou_threshold:
                suppressed = True
                break
        if not suppressed:
            keep.append(i)
    return keep


def circle_nms(
    candidates: Sequence[ScoredCircle],
    iou_threshold: float = DEFAULT_NMS_IOU,
    per_class: bool = True,
) -> list[ScoredCircle]:
    return [candidates[i] for i in nms_indices(candidates, iou_threshold, per_class)]
