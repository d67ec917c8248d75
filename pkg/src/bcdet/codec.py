"""Circle-heatmap target encoding and detection decoding.

All supervision tensors are channel-first ``float32`` arrays on the output
grid (``H/R x W/R``). Offsets and radii are stored in grid units; a single
multiplication by the stride maps decoded values back to input pixels.

Keypoint channel 0 is the left nucleus, channel 1 the right one.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields

import numpy as np
from scipy import ndimage

from .annotations import CLASS_NAMES, AnnotationSet, Detection, Point
from .geometry import Circle, ScoredCircle
from .tensorio import read_tensor, write_tensor

MAX_OFFSET = np.nextafter(np.float32(1.0), np.float32(0.0))


class OutOfGridError(ValueError):
    pass


class ShapeMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class CodecConfig:
    input_width: int = 512
    input_height: int = 512
    stride: int = 4
    num_classes: int = len(CLASS_NAMES)
    sigma_divisor: float = 3.0
    top_k: int = 100
    score_threshold: float = 0.3

    def __post_init__(self):
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.input_width % self.stride or self.input_height % self.stride:
            raise ValueError(
                f"input size {self.input_width}x{self.input_height} not divisible by stride {self.stride}"
            )
        if self.num_classes < 1 or self.top_k < 1:
            raise ValueError("num_classes and top_k must be >= 1")
        if self.sigma_divisor <= 0:
            raise ValueError("sigma_divisor must be positive")
        if not 0.0 <= self.score_threshold <= 1.0:
            raise ValueError("score_threshold must be in [0, 1]")

    @property
    def grid_width(self) -> int:
        return self.input_width // self.stride

    @property
    def grid_height(self) -> int:
        return self.input_height // self.stride

    def for_image(self, width: int, height: int) -> "CodecConfig":
        return CodecConfig(
            width, height, self.stride, self.num_classes, self.sigma_divisor, self.top_k, self.score_threshold
        )


def class_id_for(name: str, num_classes: int) -> int:
    """Heatmap channel for a class name; a single channel means class-agnostic."""
    if num_classes == 1:
        return 0
    idx = CLASS_NAMES.index(name)
    if idx >= num_classes:
        raise ValueError(f"class {name!r} needs at least {idx + 1} heatmap channels")
    return idx


@dataclass
class TargetPack:
    """Head tensors for one image. Masks are ``None`` for predictions."""

    obj_heatmap: np.ndarray
    obj_offset: np.ndarray
    radius_map: np.ndarray
    kp_offset: np.ndarray
    kp_heatmap: np.ndarray
    kp_local_offset: np.ndarray
    obj_mask: np.ndarray | None = None
    kp_mask: np.ndarray | None = None

    @classmethod
    def zeros(cls, config: CodecConfig) -> "TargetPack":
        h, w = config.grid_height, config.grid_width
        f = lambda c: np.zeros((c, h, w), dtype=np.float32)  # noqa: E731
        return cls(
            f(config.num_classes), f(2), f(1), f(4), f(2), f(2),
            np.zeros((1, h, w), dtype=np.uint8), np.zeros((1, h, w), dtype=np.uint8),
        )

    def copy(self) -> "TargetPack":
        return TargetPack(**{f.name: None if getattr(self, f.name) is None else getattr(self, f.name).copy()
                             for f in fields(self)})


# file suffixes for each head tensor, ``<stem>.<suffix>.btnsr``
PACK_SUFFIXES = {
    "obj_heatmap": "obj_hm",
    "obj_offset": "obj_off",
    "radius_map": "radius",
    "kp_heatmap": "kp_hm",
    "kp_offset": "kp_off",
    "kp_local_offset": "kp_loff",
    "obj_mask": "obj_mask",
    "kp_mask": "kp_mask",
}


def save_pack(pack: TargetPack, stem: str | os.PathLike) -> list[str]:
    paths = []
    for name, suffix in PACK_SUFFIXES.items():
        value = getattr(pack, name)
        if value is None:
            continue
        path = f"{os.fspath(stem)}.{suffix}.btnsr"
        write_tensor(value, path)
        paths.append(path)
    return paths


def load_pack(stem: str | os.PathLike) -> TargetPack:
    values = {}
    for name, suffix in PACK_SUFFIXES.items():
        path = f"{os.fspath(stem)}.{suffix}.btnsr"
        if name in ("obj_mask", "kp_mask") and not os.path.exists(path):
            values[name] = None
            continue
        values[name] = read_tensor(path)
    return TargetPack(**values)


# -- encoding --------------------------------------------------------------


def render_gaussian(heatmap: np.ndarray, class_id: int, center, sigma: float) -> None:
    """Max-merge ``exp(-d^2 / 2 sigma^2)`` around ``center=(x, y)`` into one channel."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    _, h, w = heatmap.shape
    x0, y0 = center
    if not (0 <= x0 < w and 0 <= y0 < h):
        raise OutOfGridError(f"center ({x0}, {y0}) outside {w}x{h} grid")
    ys = np.arange(h, dtype=np.float64)[:, None] - y0
    xs = np.arange(w, dtype=np.float64)[None, :] - x0
    g = np.exp(-(xs * xs + ys * ys) / (2.0 * sigma * sigma)).astype(np.float32)
    np.maximum(heatmap[class_id], g, out=heatmap[class_id])


def object_sigma(radius_grid: float, sigma_divisor: float) -> float:
    return max(1.0, radius_grid / sigma_divisor)


def keypoint_sigma(radius_grid: float, sigma_divisor: float) -> float:
    # nuclei are roughly half the cell diameter
    return max(1.0, radius_grid / (2.0 * sigma_divisor))


def _split(v: float) -> tuple[int, np.float32]:
    i = math.floor(v)
    return i, min(np.float32(v - i), MAX_OFFSET)


def encode_targets(annotations: AnnotationSet, config: CodecConfig) -> TargetPack:
    R = config.stride
    pack = TargetPack.zeros(config)
    gh, gw = config.grid_height, config.grid_width
    for cell in annotations.cells:
        cid = class_id_for(cell.cls, config.num_classes)
        ix, ox = _split(cell.cx / R)
        iy, oy = _split(cell.cy / R)
        if not (0 <= ix < gw and 0 <= iy < gh):
            raise OutOfGridError(f"cell center ({cell.cx}, {cell.cy}) outside the {config.input_width}x{config.input_height} input")
        r_grid = cell.r / R
        render_gaussian(pack.obj_heatmap, cid, (ix, iy), object_sigma(r_grid, config.sigma_divisor))
        pack.obj_offset[:, iy, ix] = (ox, oy)
        pack.radius_map[0, iy, ix] = r_grid
        pack.obj_mask[0, iy, ix] = 1
        left, right = cell.ordered_nuclei()
        pack.kp_offset[:, iy, ix] = (
            (left.x - cell.cx) / R, (left.y - cell.cy) / R,
            (right.x - cell.cx) / R, (right.y - cell.cy) / R,
        )
        kp_sigma = keypoint_sigma(r_grid, config.sigma_divisor)
        for k, nucleus in enumerate((left, right)):
            if not (0 <= nucleus.x < config.input_width and 0 <= nucleus.y < config.input_height):
                continue
            jx, lx = _split(nucleus.x / R)
            jy, ly = _split(nucleus.y / R)
            render_gaussian(pack.kp_heatmap, k, (jx, jy), kp_sigma)
            pack.kp_local_offset[:, jy, jx] = (lx, ly)
            pack.kp_mask[0, jy, jx] = 1
    return pack


# -- decoding --------------------------------------------------------------


def heatmap_peaks(channel: np.ndarray, threshold: float = -np.inf) -> np.ndarray:
    """(row, col) of cells >= all 8 neighbours and >= ``threshold``.

    Connected plateaus of equal peak cells collapse to their first cell in
    row-major order.
    """
    neighbourhood = ndimage.maximum_filter(channel, size=3, mode="constant", cval=-np.inf)
    peak = (channel >= neighbourhood) & (channel >= threshold)
    labels, n = ndimage.label(peak, structure=np.ones((3, 3), dtype=bool))
    if n == 0:
        return np.zeros((0, 2), dtype=np.int64)
    flat = labels.ravel()
    idx = np.flatnonzero(flat)
    _, first = np.unique(flat[idx], return_index=True)
    keep = np.sort(idx[first])
    return np.stack(np.unravel_index(keep, channel.shape), axis=1)


def _check_shapes(pred: TargetPack, config: CodecConfig | None):
    hm = pred.obj_heatmap
    if hm.ndim != 3:
        raise ShapeMismatchError(f"obj_heatmap must be [C, h, w], got {hm.shape}")
    _, h, w = hm.shape
    if config is not None and (h, w) != (config.grid_height, config.grid_width):
        raise ShapeMismatchError(f"heatmap grid {h}x{w} does not match config {config.grid_height}x{config.grid_width}")
    expected = {"obj_offset": 2, "radius_map": 1, "kp_offset": 4, "kp_heatmap": 2, "kp_local_offset": 2}
    for name, channels in expected.items():
        shape = getattr(pred, name).shape
        if shape != (channels, h, w):
            raise ShapeMismatchError(f"{name} must be {(channels, h, w)}, got {shape}")


def decode_detections(pred: TargetPack, config: CodecConfig) -> list[Detection]:
    """Peaks -> circles in input pixels, with nuclei snapped to keypoint peaks."""
    _check_shapes(pred, config)
    R = config.stride
    thr = config.score_threshold

    cands = []
    for c in range(pred.obj_heatmap.shape[0]):
        channel = pred.obj_heatmap[c]
        for row, col in heatmap_peaks(channel, thr):
            cands.append((-float(channel[row, col]), c, int(row), int(col)))
    cands.sort()
    cands = cands[: config.top_k]

    kp_cands = []
    for k in range(2):
        peaks = heatmap_peaks(pred.kp_heatmap[k], thr)
        if len(peaks):
            rows, cols = peaks[:, 0], peaks[:, 1]
            xs = (cols + pred.kp_local_offset[0, rows, cols].astype(np.float64)) * R
            ys = (rows + pred.kp_local_offset[1, rows, cols].astype(np.float64)) * R
            kp_cands.append(np.stack([xs, ys], axis=1))
        else:
            kp_cands.append(np.zeros((0, 2)))

    dets = []
    for neg_score, c, row, col in cands:
        gx = col + float(pred.obj_offset[0, row, col])
        gy = row + float(pred.obj_offset[1, row, col])
        r = float(pred.radius_map[0, row, col]) * R
        cx, cy = gx * R, gy * R
        nuclei = []
        for k in range(2):
            nx = (gx + float(pred.kp_offset[2 * k, row, col])) * R
            ny = (gy + float(pred.kp_offset[2 * k + 1, row, col])) * R
            pts = kp_cands[k]
            if len(pts):
                inside = np.hypot(pts[:, 0] - cx, pts[:, 1] - cy) <= r
                if inside.any():
                    sub = pts[inside]
                    best = int(np.argmin(np.hypot(sub[:, 0] - nx, sub[:, 1] - ny)))
                    nx, ny = float(sub[best, 0]), float(sub[best, 1])
            nuclei.append(Point(nx, ny))
        score = min(1.0, max(0.0, -neg_score))
        dets.append(Detection(ScoredCircle(Circle(cx, cy, r), score, c), tuple(nuclei), (row, col)))
    return dets


# -- roundtrip harness -------------------------------------------------------


@dataclass
class RoundtripReport:
    expected: int
    recovered: int
    max_center_error: float = 0.0
    max_radius_rel_error: float = 0.0
    max_keypoint_error: float = 0.0
    channel_swaps: int = 0
    collisions: list[tuple[int, int]] = field(default_factory=list)
    missing: list[int] = field(default_factory=list)

    @property
    def exact(self) -> bool:
        return not self.missing and not self.collisions and self.channel_swaps == 0


def multitask_grid_roundtrip(annotations: AnnotationSet, config: CodecConfig) -> RoundtripReport:
    """Encode, decode and compare against the annotations."""
    R = config.stride
    cells = annotations.cells
    by_cell: dict[tuple[int, int, int], int] = {}
    collisions = []
    for i, cell in enumerate(cells):
        key = (class_id_for(cell.cls, config.num_classes), math.floor(cell.cx / R), math.floor(cell.cy / R))
        if key in by_cell:
            collisions.append((by_cell[key], i))
        else:
            by_cell[key] = i

    dets = decode_detections(encode_targets(annotations, config), config)
    report = RoundtripReport(expected=len(cells), recovered=len(dets), collisions=collisions)
    used = set()
    for i, cell in enumerate(cells):
        cid = class_id_for(cell.cls, config.num_classes)
        best, best_d = None, math.inf
        for j, det in enumerate(dets):
            if j in used or det.class_id != cid:
                continue
            d = math.hypot(det.circle.circle.cx - cell.cx, det.circle.circle.cy - cell.cy)
            if d < best_d:
                best, best_d = j, d
        if best is None or best_d > cell.r:
            report.missing.append(i)
            continue
        used.add(best)
        det = dets[best]
        report.max_center_error = max(report.max_center_error, best_d)
        report.max_radius_rel_error = max(report.max_radius_rel_error, abs(det.circle.circle.r - cell.r) / cell.r)
        left, right = cell.ordered_nuclei()
        errs = [math.hypot(p.x - q.x, p.y - q.y) for p, q in zip(det.nuclei, (left, right))]
        swapped = [math.hypot(p.x - q.x, p.y - q.y) for p, q in zip(det.nuclei, (right, left))]
        if max(swapped) < max(errs):
            report.channel_swaps += 1
        report.max_keypoint_error = max(report.max_keypoint_error, *errs)
    return report
