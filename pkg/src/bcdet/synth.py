"""Synthetic binuclear-cell slides with exact ground truth, and an oracle
predictor that produces head tensors straight from annotations.

All randomness flows from one explicitly seeded PCG64 generator per call,
so outputs are reproducible across runs and platforms.

Layer map values: 0 = unstained background, 1 = cytoplasm, 2 = nucleus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .annotations import CLASS_NAMES, AnnotationSet, CircleAnnotation, Point
from .codec import CodecConfig, TargetPack, encode_targets, MAX_OFFSET
from .geometry import Circle, intersection_area

BACKGROUND, CYTOPLASM, NUCLEUS = 0, 1, 2
LAYER_COLORS = np.array(
    [
        [236.0, 234.0, 240.0],  # unstained
        [196.0, 160.0, 206.0],  # cytoplasm
        [92.0, 48.0, 128.0],  # nucleus
    ]
)


class InfeasibleSpecError(RuntimeError):
    pass


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class SynthSpec:
    wsi_width: int = 1024
    wsi_height: int = 768
    cell_count: int = 20
    class_mix: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)
    radius_range: tuple[float, float] = (20.0, 40.0)
    noise_sigma: float = 5.0
    impurity_count: int = 0
    seed: int = 0
    max_overlap: float = 0.2
    tile_size: int = 512
    max_retries: int = 2000

    def __post_init__(self):
        if len(self.class_mix) != len(CLASS_NAMES) or abs(sum(self.class_mix) - 1.0) > 1e-9:
            raise ValueError("class_mix must have 4 probabilities summing to 1")
        if any(p < 0 for p in self.class_mix):
            raise ValueError("class_mix probabilities must be non-negative")
        lo, hi = self.radius_range
        if not (4 < lo <= hi < self.tile_size / 4):
            raise ValueError(f"radius_range must lie within (4, {self.tile_size / 4})")
        if self.noise_sigma < 0 or self.cell_count < 0 or self.impurity_count < 0:
            raise ValueError("noise_sigma and counts must be non-negative")


@dataclass(frozen=True)
class CellGeometry:
    """Everything needed to repaint one cell: the annotation plus nucleus-layer shapes."""

    cell: CircleAnnotation
    nucleus_radius: float
    extra_disks: tuple[tuple[float, float, float], ...] = ()
    bridge_width: float = 0.0

    def nucleus_disks(self):
        return tuple((p.x, p.y, self.nucleus_radius) for p in self.cell.nuclei) + self.extra_disks


class SynthSlide(NamedTuple):
    image: np.ndarray
    annotations: AnnotationSet
    layer_map: np.ndarray
    geometry: tuple[CellGeometry, ...]


class SynthPatch(NamedTuple):
    image: np.ndarray
    cell: CircleAnnotation
    layer_map: np.ndarray


# -- rasterisation ----------------------------------------------------------


def _window(shape, x0, y0, x1, y1):
    h, w = shape
    r0, r1 = max(0, int(math.floor(y0))), min(h, int(math.ceil(y1)) + 1)
    c0, c1 = max(0, int(math.floor(x0))), min(w, int(math.ceil(x1)) + 1)
    ys = np.arange(r0, r1)[:, None] + 0.5
    xs = np.arange(c0, c1)[None, :] + 0.5
    return (slice(r0, r1), slice(c0, c1)), xs, ys


def paint_disk(layer_map: np.ndarray, cx: float, cy: float, r: float, value: int) -> None:
    """Set pixels whose centers lie within the disk."""
    sl, xs, ys = _window(layer_map.shape, cx - r, cy - r, cx + r, cy + r)
    inside = (xs - cx) ** 2 + (ys - cy) ** 2 <= r * r
    layer_map[sl][inside] = value


def paint_band(layer_map: np.ndarray, p: Point, q: Point, width: float, value: int) -> None:
    half = width / 2.0
    sl, xs, ys = _window(
        layer_map.shape, min(p.x, q.x) - half, min(p.y, q.y) - half, max(p.x, q.x) + half, max(p.y, q.y) + half
    )
    dx, dy = q.x - p.x, q.y - p.y
    length2 = dx * dx + dy * dy
    t = np.clip(((xs - p.x) * dx + (ys - p.y) * dy) / length2, 0.0, 1.0)
    dist2 = (xs - p.x - t * dx) ** 2 + (ys - p.y - t * dy) ** 2
    layer_map[sl][dist2 <= half * half] = value


def paint_cell_nuclei(layer_map: np.ndarray, geom: CellGeometry) -> None:
    for x, y, r in geom.nucleus_disks():
        paint_disk(layer_map, x, y, r, NUCLEUS)
    if geom.bridge_width > 0:
        a, b = geom.cell.nuclei
        paint_band(layer_map, a, b, geom.bridge_width, NUCLEUS)


def render_layers(layer_map: np.ndarray, noise_sigma: float, rng: np.random.Generator) -> np.ndarray:
    img = LAYER_COLORS[layer_map]
    if noise_sigma > 0:
        img = img + rng.normal(0.0, noise_sigma, size=img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


# -- cell morphology -------------------------------------------------------


def _make_cell(cls: str, cx: float, cy: float, r: float, rng: np.random.Generator) -> CellGeometry:
    theta = rng.uniform(-math.pi / 3, math.pi / 3)
    off = r * rng.uniform(0.38, 0.45)
    rn = r * rng.uniform(0.25, 0.32)
    ux, uy = math.cos(theta), math.sin(theta)
    left = Point(cx - off * ux, cy - off * uy)
    right = Point(cx + off * ux, cy + off * uy)
    # unit vector perpendicular to the nucleus axis
    px, py = -uy, ux
    side = 1.0 if rng.random() < 0.5 else -1.0
    extra: tuple = ()
    bridge = 0.0
    if cls == "mn":
        rd = 0.1 * r
        dist = 0.72 * r
        extra = ((cx + side * dist * px, cy + side * dist * py, rd),)
    elif cls == "nb":
        rb = 0.12 * r
        host = left if rng.random() < 0.5 else right
        reach = rn + rb
        extra = ((host.x + side * reach * px, host.y + side * reach * py, rb),)
    elif cls == "npb":
        bridge = max(1.5, 0.1 * r)
    return CellGeometry(CircleAnnotation(cls, cx, cy, r, (left, right)), rn, extra, bridge)


def _overlap_ok(c: Circle, placed, max_overlap: float) -> bool:
    for other in placed:
        inter = intersection_area(c, other)
        if inter > max_overlap * math.pi * min(c.r, other.r) ** 2:
            return False
    return True


def generate_wsi(spec: SynthSpec) -> SynthSlide:
    """Synthetic slide: background, cytoplasm disks, two nuclei per cell and class features.

    mn adds a detached micronucleus dot, nb a bud tangent to one nucleus and
    npb a thin nucleus-coloured bridge between the two nuclei.
    """
    rng = make_rng(spec.seed)
    w, h = spec.wsi_width, spec.wsi_height
    lo, hi = spec.radius_range
    if 2 * lo >= min(w, h):
        raise InfeasibleSpecError("cells do not fit in the slide")
    placed: list[Circle] = []
    geoms: list[CellGeometry] = []
    class_ids = rng.choice(len(CLASS_NAMES), size=spec.cell_count, p=np.asarray(spec.class_mix))
    for cid in class_ids:
        for _ in range(spec.max_retries):
            r = rng.uniform(lo, hi)
            if 2 * r >= min(w, h):
                continue
            c = Circle(rng.uniform(r, w - r), rng.uniform(r, h - r), r)
            if _overlap_ok(c, placed, spec.max_overlap):
                break
        else:
            raise InfeasibleSpecError(f"could not place cell {len(placed) + 1} after {spec.max_retries} tries")
        placed.append(c)
        geoms.append(_make_cell(CLASS_NAMES[cid], c.cx, c.cy, c.r, rng))

    impurities = []
    for _ in range(spec.impurity_count):
        for _ in range(spec.max_retries):
            r = rng.uniform(0.25 * lo, 0.35 * lo)
            c = Circle(rng.uniform(r, w - r), rng.uniform(r, h - r), r)
            if _overlap_ok(c, placed + impurities, 0.0):
                impurities.append(c)
                break
        else:
            raise InfeasibleSpecError("could not place impurity")

    layer_map = np.zeros((h, w), dtype=np.uint8)
    for g in geoms:
        paint_disk(layer_map, g.cell.cx, g.cell.cy, g.cell.r, CYTOPLASM)
    for g in geoms:
        paint_cell_nuclei(layer_map, g)
    for c in impurities:
        paint_disk(layer_map, c.cx, c.cy, c.r, NUCLEUS)
    image = render_layers(layer_map, spec.noise_sigma, rng)
    annotations = AnnotationSet(w, h, [g.cell for g in geoms])
    return SynthSlide(image, annotations, layer_map, tuple(geoms))


def generate_cell_patch(cls: str, size: int = 128, seed: int = 0, noise_sigma: float = 5.0) -> SynthPatch:
    """One centred cell on a ``size x size`` patch."""
    if cls not in CLASS_NAMES:
        raise ValueError(f"unknown class {cls!r}")
    rng = make_rng(seed)
    r = size * rng.uniform(0.30, 0.42)
    if size < 4 * 0.32 * r:
        raise ValueError("patch too small for the nucleus size")
    c = size / 2.0
    geom = _make_cell(cls, c, c, r, rng)
    layer_map = np.zeros((size, size), dtype=np.uint8)
    paint_disk(layer_map, c, c, r, CYTOPLASM)
    paint_cell_nuclei(layer_map, geom)
    return SynthPatch(render_layers(layer_map, noise_sigma, rng), geom.cell, layer_map)


# -- oracle predictor --------------------------------------------------------


@dataclass(frozen=True)
class OracleConfig:
    heatmap_noise: float = 0.0
    offset_noise: float = 0.0
    radius_noise: float = 0.0
    drop_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if min(self.heatmap_noise, self.offset_noise, self.radius_noise) < 0:
            raise ValueError("noise levels must be non-negative")
        if not 0.0 <= self.drop_rate <= 1.0:
            raise ValueError("drop_rate must be in [0, 1]")


def _spread_regression(pack: TargetPack) -> None:
    """Copy each center's regression values into its 3x3 neighbourhood.

    A trained head predicts size and offsets densely, so a peak that noise
    moves by one cell still reads a sensible radius. Cells that are
    themselves an object center keep their own values.
    """
    centers = pack.obj_mask[0].astype(bool)
    h, w = centers.shape
    heads = (pack.obj_offset, pack.radius_map, pack.kp_offset)
    for iy, ix in zip(*np.nonzero(centers)):
        y0, y1 = max(0, iy - 1), min(h, iy + 2)
        x0, x1 = max(0, ix - 1), min(w, ix + 2)
        free = ~centers[y0:y1, x0:x1]
        for head in heads:
            head[:, y0:y1, x0:x1][:, free] = head[:, iy, ix][:, None]
    kp_centers = pack.kp_mask[0].astype(bool)
    for iy, ix in zip(*np.nonzero(kp_centers)):
        y0, y1 = max(0, iy - 1), min(h, iy + 2)
        x0, x1 = max(0, ix - 1), min(w, ix + 2)
        free = ~kp_centers[y0:y1, x0:x1]
        pack.kp_local_offset[:, y0:y1, x0:x1][:, free] = pack.kp_local_offset[:, iy, ix][:, None]


def oracle_predict(annotations: AnnotationSet, config: CodecConfig,
                   oracle: OracleConfig = OracleConfig()) -> TargetPack:
    """Head tensors a perfect network would emit, optionally perturbed.

    Dropping uses one uniform draw per object, so the set of dropped objects
    grows monotonically with ``drop_rate`` for a fixed seed.
    """
    rng = make_rng(oracle.seed)
    u = rng.random(len(annotations.cells))
    kept = [c for c, ui in zip(annotations.cells, u) if ui >= oracle.drop_rate]
    pack = encode_targets(AnnotationSet(annotations.width, annotations.height, kept), config)
    _spread_regression(pack)
    pack.obj_mask = pack.kp_mask = None

    def jitter(arr, sigma):
        return arr + rng.normal(0.0, sigma, size=arr.shape).astype(np.float32)

    if oracle.heatmap_noise > 0:
        pack.obj_heatmap = np.clip(jitter(pack.obj_heatmap, oracle.heatmap_noise), 0.0, 1.0)
        pack.kp_heatmap = np.clip(jitter(pack.kp_heatmap, oracle.heatmap_noise), 0.0, 1.0)
    if oracle.offset_noise > 0:
        pack.obj_offset = np.clip(jitter(pack.obj_offset, oracle.offset_noise), 0.0, MAX_OFFSET)
        pack.kp_local_offset = np.clip(jitter(pack.kp_local_offset, oracle.offset_noise), 0.0, MAX_OFFSET)
        pack.kp_offset = jitter(pack.kp_offset, oracle.offset_noise)
    if oracle.radius_noise > 0:
        pack.radius_map = np.maximum(jitter(pack.radius_map, oracle.radius_noise), 0.0)
    return pack


def random_annotation_set(width: int, height: int, count: int, seed: int,
                          radius_range=(20.0, 40.0)) -> AnnotationSet:
    """Annotations only (no image), using the slide generator's placement rules."""
    spec = SynthSpec(width, height, count, radius_range=radius_range, noise_sigma=0.0, seed=seed,
                     tile_size=max(512, int(4 * radius_range[1]) + 4))
    return generate_wsi(spec).annotations
