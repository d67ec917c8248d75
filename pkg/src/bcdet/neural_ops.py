"""Forward passes of the hand-designed blocks: dilated spatial attention,
instance normalisation and attention-rollout patch selection."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit

DSA_DILATION = 2
DSA_PADDING = 2


@dataclass(frozen=True)
class DsaKernel:
    """3x3 kernel over the [avg; max] channel-pooled maps -> one attention map."""

    weights: np.ndarray = field(default_factory=lambda: np.zeros((2, 3, 3)))
    bias: float = 0.0

    def __post_init__(self):
        if np.shape(self.weights) != (2, 3, 3):
            raise ValueError(f"DSA kernel weights must be (2, 3, 3), got {np.shape(self.weights)}")


def dilated_conv3x3(maps: np.ndarray, weights: np.ndarray, bias: float = 0.0,
                    dilation: int = DSA_DILATION, padding: int = DSA_PADDING) -> np.ndarray:
    """Stride-1 zero-padded dilated cross-correlation, [Cin, H, W] -> [H, W]."""
    cin, h, w = maps.shape
    padded = np.pad(maps, ((0, 0), (padding, padding), (padding, padding)))
    out_h = h + 2 * padding - 2 * dilation
    out_w = w + 2 * padding - 2 * dilation
    out = np.full((out_h, out_w), float(bias))
    for c in range(cin):
        for i in range(3):
            for j in range(3):
                oy, ox = i * dilation, j * dilation
                out += weights[c, i, j] * padded[c, oy : oy + out_h, ox : ox + out_w]
    return out


def dsa_forward(features: np.ndarray, kernel: DsaKernel) -> tuple[np.ndarray, np.ndarray]:
    """Return (attention [1, H, W], features + features * attention)."""
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 3:
        raise ValueError(f"features must be [C, H, W], got {f.shape}")
    pooled = np.stack([f.mean(axis=0), f.max(axis=0)])
    attention = expit(dilated_conv3x3(pooled, np.asarray(kernel.weights, dtype=np.float64), kernel.bias))
    attention = attention[None]
    return attention, f + f * attention


def instance_normalize(x: np.ndarray, epsilon: float = 1e-5) -> np.ndarray:
    """Per-(sample, channel) standardisation of a [B, C, H, W] tensor (biased variance)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 4:
        raise ValueError(f"expected [B, C, H, W], got {x.shape}")
    mu = x.mean(axis=(2, 3), keepdims=True)
    var = ((x - mu) ** 2).mean(axis=(2, 3), keepdims=True)
    return (x - mu) / np.sqrt(var + epsilon)


def attention_rollout(layers: Sequence[np.ndarray] | np.ndarray, residual: bool = False) -> np.ndarray:
    """Per-head joint attention A_L @ ... @ A_1, shape [H, T, T].

    With ``residual`` each layer is first mixed with the identity and
    row-renormalised, (A + I) / 2.
    """
    layers = [np.asarray(a, dtype=np.float64) for a in layers]
    if not layers:
        raise ValueError("need at least one attention layer")
    shape = layers[0].shape
    if len(shape) != 3 or shape[1] != shape[2]:
        raise ValueError(f"attention layers must be [H, T, T], got {shape}")
    for a in layers[1:]:
        if a.shape[0] != shape[0]:
            raise ValueError(f"head count mismatch across layers: {shape[0]} vs {a.shape[0]}")
        if a.shape != shape:
            raise ValueError(f"token count mismatch across layers: {shape} vs {a.shape}")
    eye = np.eye(shape[1])
    joint = None
    for a in layers:
        if residual:
            a = a + eye
            a = a / a.sum(axis=-1, keepdims=True)
        joint = a if joint is None else a @ joint
    return joint


def select_key_patches(layers, query_row: int = 0, residual: bool = False) -> list[int]:
    """For each head, the non-query token the query row attends to most (lowest index on ties)."""
    joint = attention_rollout(layers, residual=residual)
    t = joint.shape[-1]
    if not 0 <= query_row < t:
        raise IndexError(f"query_row {query_row} out of range for {t} tokens")
    rows = joint[:, query_row, :].copy()
    rows[:, query_row] = -np.inf
    return [int(i) for i in np.argmax(rows, axis=1)]
