"""Sliding-window tiling of whole-slide images and cross-tile merging."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .annotations import Detection
from .geometry import DEFAULT_NMS_IOU, nms_indices

DEFAULT_TILE_SIZE = 512
DEFAULT_OVERLAP = 128
PAD_VALUE = (128, 128, 128)


@dataclass(frozen=True)
class TileGrid:
    tile_size: int
    overlap: int
    origins: tuple[tuple[int, int], ...]
    wsi_width: int
    wsi_height: int
    pad_value: tuple[int, int, int] = PAD_VALUE

    @property
    def stride(self) -> int:
        return self.tile_size - self.overlap

    def __len__(self) -> int:
        return len(self.origins)

    def padding(self, index: int) -> tuple[int, int]:
        """Padded (columns, rows) on the right/bottom of a tile."""
        x, y = self.origins[index]
        return max(0, x + self.tile_size - self.wsi_width), max(0, y + self.tile_size - self.wsi_height)

    def to_dict(self) -> dict:
        return {
            "tile_size": self.tile_size,
            "overlap": self.overlap,
            "wsi": {"width": self.wsi_width, "height": self.wsi_height},
            "origins": [list(o) for o in self.origins],
        }

    @classmethod
    def from_dict(cls, obj) -> "TileGrid":
        try:
            return cls(
                int(obj["tile_size"]),
                int(obj["overlap"]),
                tuple((int(x), int(y)) for x, y in obj["origins"]),
                int(obj["wsi"]["width"]),
                int(obj["wsi"]["height"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"invalid grid JSON: {exc}") from None


def write_grid(grid: TileGrid, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        json.dump(grid.to_dict(), fh, indent=1)
        fh.write("\n")


def read_grid(path: str | os.PathLike) -> TileGrid:
    with open(path) as fh:
        return TileGrid.from_dict(json.load(fh))


def _axis_origins(length: int, tile: int, stride: int) -> list[int]:
    origins = [0]
    while origins[-1] + tile < length:
        origins.append(origins[-1] + stride)
    return origins


def plan_grid(wsi_w: int, wsi_h: int, tile_size: int = DEFAULT_TILE_SIZE,
              overlap: int = DEFAULT_OVERLAP, pad_value=PAD_VALUE) -> TileGrid:
    """Row-major tile origins at multiples of the stride, stopping once the edge is covered."""
    if overlap < 0 or tile_size <= overlap:
        raise ValueError(f"need tile_size > overlap >= 0, got {tile_size}, {overlap}")
    if wsi_w < 1 or wsi_h < 1:
        raise ValueError("WSI dimensions must be positive")
    stride = tile_size - overlap
    xs = _axis_origins(wsi_w, tile_size, stride)
    ys = _axis_origins(wsi_h, tile_size, stride)
    return TileGrid(tile_size, overlap, tuple((x, y) for y in ys for x in xs), wsi_w, wsi_h, tuple(pad_value))


def extract_tile(wsi: np.ndarray, grid: TileGrid, index: int, pad_value=None) -> np.ndarray:
    if not 0 <= index < len(grid.origins):
        raise IndexError(f"tile index {index} out of range for {len(grid.origins)} tiles")
    pad = grid.pad_value if pad_value is None else pad_value
    x, y = grid.origins[index]
    t = grid.tile_size
    if wsi.ndim == 3:
        tile = np.empty((t, t, wsi.shape[2]), dtype=wsi.dtype)
        tile[...] = np.asarray(pad, dtype=wsi.dtype)[: wsi.shape[2]]
    else:
        tile = np.full((t, t), pad[0], dtype=wsi.dtype)
    crop = wsi[y : y + t, x : x + t]
    tile[: crop.shape[0], : crop.shape[1]] = crop
    return tile


@dataclass(frozen=True)
class TileDetection:
    tile_index: int
    detection: Detection


def remap_to_wsi(tile_dets, grid: TileGrid) -> tuple[list[Detection], int]:
    """Translate tile-local detections to WSI coordinates.

    Returns the detections plus how many were dropped for having their
    center in the gray padding beyond the WSI.
    """
    out, dropped = [], 0
    for td in tile_dets:
        if not 0 <= td.tile_index < len(grid.origins):
            raise IndexError(f"tile index {td.tile_index} out of range")
        x, y = grid.origins[td.tile_index]
        det = td.detection.translated(x, y)
        c = det.circle.circle
        if 0 <= c.cx < grid.wsi_width and 0 <= c.cy < grid.wsi_height:
            out.append(det)
        else:
            dropped += 1
    return out, dropped


def merge_cross_tile(dets, iou_threshold: float = DEFAULT_NMS_IOU, per_class: bool = True) -> list[Detection]:
    """Greedy circle NMS over the union of tile detections (input order breaks remaining ties)."""
    dets = sorted(dets, key=lambda d: -d.score)
    keep = nms_indices([d.circle for d in dets], iou_threshold, per_class)
    return [dets[i] for i in keep]
