"""Reference evaluators for the detection and classification losses.

Everything runs in float64. Each loss that the gradient check covers has a
matching ``*_grad`` returning d(loss)/d(pred) with the same shape as pred.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax

from .codec import ShapeMismatchError, TargetPack

EPS = 1e-7


@dataclass(frozen=True)
class FocalParams:
    alpha: float = 2.0
    beta: float = 4.0

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")


@dataclass(frozen=True)
class DetectionLossWeights:
    lambda_radius: float = 0.1
    lambda_offset: float = 1.0

    def __post_init__(self):
        if self.lambda_radius < 0 or self.lambda_offset < 0:
            raise ValueError("loss weights must be non-negative")


def _same_shape(a, b, what="pred/target"):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{what} shapes differ: {a.shape} vs {b.shape}")
    return a, b


def focal_heatmap_loss(pred, target, params: FocalParams = FocalParams()) -> float:
    """Penalty-reduced focal loss, normalised by max(1, #cells with target == 1)."""
    pred, target = _same_shape(pred, target)
    p = np.clip(pred, EPS, 1.0 - EPS)
    pos = target == 1.0
    a, b = params.alpha, params.beta
    pos_term = ((1.0 - p) ** a * np.log(p))[pos].sum()
    neg_term = ((1.0 - target) ** b * p**a * np.log1p(-p))[~pos].sum()
    return float(-(pos_term + neg_term) / max(1, int(pos.sum())))


def focal_heatmap_loss_grad(pred, target, params: FocalParams = FocalParams()) -> np.ndarray:
    """Gradient w.r.t. pred, ignoring the clamp (valid for pred inside (EPS, 1 - EPS))."""
    pred, target = _same_shape(pred, target)
    p = np.clip(pred, EPS, 1.0 - EPS)
    pos = target == 1.0
    a, b = params.alpha, params.beta
    n = max(1, int(pos.sum()))
    g_pos = -(-a * (1.0 - p) ** (a - 1) * np.log(p) + (1.0 - p) ** a / p)
    g_neg = -((1.0 - target) ** b) * (a * p ** (a - 1) * np.log1p(-p) - p**a / (1.0 - p))
    return np.where(pos, g_pos, g_neg) / n


def _mask_for(pred, mask):
    mask = np.asarray(mask, dtype=np.float64)
    if mask.ndim == pred.ndim and mask.shape[0] == 1 and pred.shape[0] != 1:
        if mask.shape[1:] != pred.shape[1:]:
            raise ShapeMismatchError(f"mask {mask.shape} does not fit pred {pred.shape}")
        return mask, float(mask.sum())
    if mask.shape != pred.shape:
        raise ShapeMismatchError(f"mask {mask.shape} does not fit pred {pred.shape}")
    return mask, float(mask.sum())


def masked_l1_loss(pred, target, mask) -> float:
    """Sum of |pred - target| over supervised cells (all channels), per supervised entity.

    A ``[1, h, w]`` mask marks entities and applies to every channel; a mask
    of pred's full shape counts each masked element as one entity.
    """
    pred, target = _same_shape(pred, target)
    m, count = _mask_for(pred, mask)
    if count == 0:
        return 0.0
    return float((np.abs(pred - target) * m).sum() / count)


def masked_l1_loss_grad(pred, target, mask) -> np.ndarray:
    pred, target = _same_shape(pred, target)
    m, count = _mask_for(pred, mask)
    if count == 0:
        return np.zeros_like(pred)
    return np.sign(pred - target) * np.broadcast_to(m, pred.shape) / count


def suppression_loss(attention, background_mask) -> float:
    """Mean |attention| over background pixels (mask == 1); nucleus pixels are ignored."""
    att, mask = _same_shape(attention, background_mask, "attention/mask")
    n = float(mask.sum())
    if n == 0:
        return 0.0
    return float((np.abs(att) * mask).sum() / n)


def suppression_loss_grad(attention, background_mask) -> np.ndarray:
    att, mask = _same_shape(attention, background_mask, "attention/mask")
    n = float(mask.sum())
    if n == 0:
        return np.zeros_like(att)
    return np.sign(att) * mask / n


def cross_entropy(scores, label: int) -> float:
    s = np.asarray(scores, dtype=np.float64).ravel()
    if not 0 <= label < s.size:
        raise IndexError(f"label {label} out of range for {s.size} classes")
    return float(logsumexp(s) - s[label])


def cross_entropy_grad(scores, label: int) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64).ravel()
    if not 0 <= label < s.size:
        raise IndexError(f"label {label} out of range for {s.size} classes")
    g = softmax(s)
    g[label] -= 1.0
    return g


@dataclass(frozen=True)
class DetectionLossBreakdown:
    obj_heatmap: float
    radius: float
    offset: float
    kp_offset: float
    kp_heatmap: float
    kp_local_offset: float
    weights: DetectionLossWeights

    @property
    def object_loss(self) -> float:
        w = self.weights
        return self.obj_heatmap + w.lambda_radius * self.radius + w.lambda_offset * self.offset

    @property
    def keypoint_loss(self) -> float:
        return self.kp_offset + self.kp_heatmap + self.kp_local_offset

    @property
    def total(self) -> float:
        return self.object_loss + self.keypoint_loss

    def weighted_terms(self) -> dict[str, float]:
        w = self.weights
        return {
            "obj_heatmap": self.obj_heatmap,
            "radius": w.lambda_radius * self.radius,
            "offset": w.lambda_offset * self.offset,
            "kp_offset": self.kp_offset,
            "kp_heatmap": self.kp_heatmap,
            "kp_local_offset": self.kp_local_offset,
        }

    def to_dict(self) -> dict:
        return {
            "raw": {
                "obj_heatmap": self.obj_heatmap,
                "radius": self.radius,
                "offset": self.offset,
                "kp_offset": self.kp_offset,
                "kp_heatmap": self.kp_heatmap,
                "kp_local_offset": self.kp_local_offset,
            },
            "weighted": self.weighted_terms(),
            "object": self.object_loss,
            "keypoints": self.keypoint_loss,
            "total": self.total,
        }


def detection_total_loss(
    pred: TargetPack,
    target: TargetPack,
    weights: DetectionLossWeights = DetectionLossWeights(),
    params: FocalParams = FocalParams(),
) -> DetectionLossBreakdown:
    if target.obj_mask is None or target.kp_mask is None:
        raise ValueError("target pack needs obj_mask and kp_mask")
    return DetectionLossBreakdown(
        obj_heatmap=focal_heatmap_loss(pred.obj_heatmap, target.obj_heatmap, params),
        radius=masked_l1_loss(pred.radius_map, target.radius_map, target.obj_mask),
        offset=masked_l1_loss(pred.obj_offset, target.obj_offset, target.obj_mask),
        kp_offset=masked_l1_loss(pred.kp_offset, target.kp_offset, target.obj_mask),
        kp_heatmap=focal_heatmap_loss(pred.kp_heatmap, target.kp_heatmap, params),
        kp_local_offset=masked_l1_loss(pred.kp_local_offset, target.kp_local_offset, target.kp_mask),
        weights=weights,
    )


def perfect_prediction(target: TargetPack) -> TargetPack:
    """The zero-loss prediction for a target: heatmaps at 1 on peaks, 0 elsewhere."""
    pred = target.copy()
    pred.obj_heatmap = (target.obj_heatmap == 1.0).astype(np.float32)
    pred.kp_heatmap = (target.kp_heatmap == 1.0).astype(np.float32)
    pred.obj_mask = pred.kp_mask = None
    return pred


@dataclass(frozen=True)
class ClassificationLossBreakdown:
    cnn_cls: float
    fusion_cls: float
    suppressed: float

    @property
    def cls(self) -> float:
        return self.cnn_cls + self.fusion_cls

    @property
    def total(self) -> float:
        return self.cls + self.suppressed

    def to_dict(self) -> dict:
        return {
            "cnn_cls": self.cnn_cls,
            "fusion_cls": self.fusion_cls,
            "cls": self.cls,
            "suppressed": self.suppressed,
            "total": self.total,
        }


def classification_total_loss(cnn_scores, fusion_scores, label: int, attention, background_mask):
    """Deep-supervised CE on both heads plus the background suppression term."""
    return ClassificationLossBreakdown(
        cnn_cls=cross_entropy(cnn_scores, label),
        fusion_cls=cross_entropy(fusion_scores, label),
        suppressed=suppression_loss(attention, background_mask),
    )
