"""Three-layer colour clustering of stained cell patches and the nucleus
background mask derived from it."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LUMA = np.array([0.299, 0.587, 0.114])


@dataclass
class ColorLayerResult:
    labels: np.ndarray  # [H, W] int
    centroids: np.ndarray  # [k, channels]
    iterations: int
    inertia: float
    inertia_history: list[float] = field(default_factory=list)


@dataclass
class NucleusMask:
    mask: np.ndarray  # [H, W] uint8, 1 = background
    nucleus_cluster: int


def _pixels(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image)
    if image.ndim == 2:
        image = image[:, :, None]
    if image.ndim != 3 or image.shape[0] * image.shape[1] == 0:
        raise ValueError(f"expected a non-empty [H, W] or [H, W, C] image, got {image.shape}")
    return image.reshape(-1, image.shape[2]).astype(np.float64)


def _sq_dists(pixels: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    return ((pixels[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)


def assign_labels(pixels: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Nearest centroid per pixel; ties go to the lowest cluster index."""
    return np.argmin(_sq_dists(np.asarray(pixels, dtype=np.float64), centroids), axis=1)


def _kmeans_pp(pixels: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(pixels)
    centroids = [pixels[rng.integers(n)]]
    d2 = ((pixels - centroids[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        idx = rng.integers(n) if total <= 0 else rng.choice(n, p=d2 / total)
        centroids.append(pixels[idx])
        d2 = np.minimum(d2, ((pixels - pixels[idx]) ** 2).sum(axis=1))
    return np.array(centroids)


def _lloyd(pixels: np.ndarray, centroids: np.ndarray, tol: float, max_iter: int):
    k = len(centroids)
    history = []
    iterations = 0
    for iterations in range(1, max_iter + 1):
        d2 = _sq_dists(pixels, centroids)
        labels = np.argmin(d2, axis=1)
        best = d2[np.arange(len(pixels)), labels]
        history.append(float(best.sum()))
        new = centroids.copy()
        counts = np.bincount(labels, minlength=k)
        for j in range(k):
            if counts[j]:
                new[j] = pixels[labels == j].mean(axis=0)
        for j in np.flatnonzero(counts == 0):
            far = int(np.argmax(best))
            new[j] = pixels[far]
            best[far] = 0.0
        shift = float(np.sqrt(((new - centroids) ** 2).sum(axis=1)).max())
        centroids = new
        if shift < tol:
            break
    d2 = _sq_dists(pixels, centroids)
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(len(pixels)), labels].sum())
    history.append(inertia)
    return labels, centroids, iterations, inertia, history


def kmeans_color(image: np.ndarray, k: int = 3, seed: int = 0, tol: float = 1e-4,
                 max_iter: int = 100, n_init: int = 4) -> ColorLayerResult:
    """Lloyd's k-means on pixel colours with seeded k-means++ initialisation.

    ``n_init`` initialisations are drawn from one generator and the run with
    the lowest final inertia is kept (earliest run on ties). Empty clusters
    are re-seeded from the currently worst-fit pixel.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if n_init < 1:
        raise ValueError("n_init must be >= 1")
    pixels = _pixels(image)
    h, w = np.asarray(image).shape[:2]
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        run = _lloyd(pixels, _kmeans_pp(pixels, k, rng), tol, max_iter)
        if best is None or run[3] < best[3]:
            best = run
    labels, centroids, iterations, inertia, history = best
    return ColorLayerResult(labels.reshape(h, w), centroids, iterations, inertia, history)


def luminance(colors: np.ndarray) -> np.ndarray:
    colors = np.asarray(colors, dtype=np.float64)
    if colors.shape[-1] == 3:
        return colors @ LUMA
    return colors.mean(axis=-1)


def nucleus_mask_from_keypoints(result: ColorLayerResult, keypoints) -> NucleusMask:
    """Pick the nucleus layer by majority vote over 3x3 windows at the keypoints.

    Vote ties go to the darker centroid.
    """
    labels = result.labels
    h, w = labels.shape
    votes = np.zeros(len(result.centroids), dtype=np.int64)
    pts = [(p.x, p.y) if hasattr(p, "x") else tuple(p) for p in keypoints]
    if not pts:
        raise ValueError("need at least one keypoint")
    for x, y in pts:
        if not (0 <= x < w and 0 <= y < h):
            raise ValueError(f"keypoint ({x}, {y}) outside {w}x{h} image")
        col, row = int(np.floor(x)), int(np.floor(y))
        window = labels[max(0, row - 1) : row + 2, max(0, col - 1) : col + 2]
        votes += np.bincount(window.ravel(), minlength=len(votes))
    top = np.flatnonzero(votes == votes.max())
    lum = luminance(result.centroids[top])
    cluster = int(top[np.argmin(lum)])
    return NucleusMask((labels != cluster).astype(np.uint8), cluster)


def downsample_mask(mask: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Nearest-neighbour resize sampling source pixel floor((i + 0.5) * scale)."""
    mask = np.asarray(mask)
    if out_h < 1 or out_w < 1:
        raise ValueError("output dims must be >= 1")
    h, w = mask.shape[-2:]
    rows = np.minimum(np.floor((np.arange(out_h) + 0.5) * (h / out_h)).astype(np.int64), h - 1)
    cols = np.minimum(np.floor((np.arange(out_w) + 0.5) * (w / out_w)).astype(np.int64), w - 1)
    return mask[..., rows[:, None], cols[None, :]]
