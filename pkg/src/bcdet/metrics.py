"""Detection (COCO-style AP over circle IoU), classification and SSIM metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .annotations import AnnotationSet, Detection
from .codec import class_id_for
from .geometry import circle_iou

IOU_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
RECALL_POINTS = np.linspace(0.0, 1.0, 101)


class ImageMismatchError(ValueError):
    pass


@dataclass
class DetEvalReport:
    ap: float
    ap50: float
    recall50: float
    f1: float
    ap_per_iou: dict[float, float] = field(default_factory=dict)
    pr_curves: dict[float, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "ap": self.ap,
            "ap50": self.ap50,
            "recall50": self.recall50,
            "f1": self.f1,
            "ap_per_iou": {f"{k:.2f}": v for k, v in self.ap_per_iou.items()},
        }


def f1_from_ap_recall(ap50: float, recall50: float) -> float:
    if ap50 + recall50 == 0:
        return 0.0
    return 2.0 * ap50 * recall50 / (ap50 + recall50)


def _match_image(gt_cells, gt_ids, preds: Sequence[Detection], thr: float):
    """Greedy score-ordered matching. Returns (scores, tp flags, class ids) per prediction."""
    order = sorted(range(len(preds)), key=lambda i: preds[i].circle.sort_key())
    taken = [False] * len(gt_cells)
    out = []
    for i in order:
        p = preds[i]
        best, best_iou = -1, thr
        for j, cell in enumerate(gt_cells):
            if taken[j] or gt_ids[j] != p.class_id:
                continue
            iou = circle_iou(p.circle.circle, cell.circle)
            if iou >= best_iou and (best < 0 or iou > best_iou):
                best, best_iou = j, iou
        if best >= 0:
            taken[best] = True
        out.append((p.score, best >= 0, p.class_id))
    return out


def _pr(scores, tps, n_gt):
    order = np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")
    tp = np.asarray(tps, dtype=np.float64)[order]
    ctp = np.cumsum(tp)
    cfp = np.cumsum(1.0 - tp)
    recall = ctp / n_gt if n_gt else np.zeros_like(ctp)
    precision = ctp / np.maximum(ctp + cfp, np.finfo(np.float64).tiny)
    return precision, recall


def interpolated_ap(precision: np.ndarray, recall: np.ndarray) -> float:
    """COCO 101-point interpolated AP."""
    if len(precision) == 0:
        return 0.0
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, RECALL_POINTS, side="left")
    vals = np.where(idx < len(envelope), envelope[np.minimum(idx, len(envelope) - 1)], 0.0)
    return float(vals.mean())


def evaluate_detections(
    gts: Sequence[AnnotationSet],
    preds: Sequence[Sequence[Detection]],
    iou_thresholds: Sequence[float] = IOU_THRESHOLDS,
    num_classes: int = 4,
) -> DetEvalReport:
    """COCO-style AP averaged over classes present in the ground truth and IoU thresholds."""
    if len(gts) != len(preds):
        raise ImageMismatchError(f"{len(gts)} ground-truth images vs {len(preds)} prediction lists")
    gt_ids = [[class_id_for(c.cls, num_classes) for c in g.cells] for g in gts]
    counts: dict[int, int] = {}
    for ids in gt_ids:
        for cid in ids:
            counts[cid] = counts.get(cid, 0) + 1
    n_gt = sum(counts.values())

    ap_per_iou, curves = {}, {}
    recall50 = 0.0
    for thr in iou_thresholds:
        records = []
        for g, ids, p in zip(gts, gt_ids, preds):
            records.extend(_match_image(g.cells, ids, p, thr))
        class_aps = []
        for cid, n in sorted(counts.items()):
            rec = [r for r in records if r[2] == cid]
            precision, recall = _pr([r[0] for r in rec], [r[1] for r in rec], n)
            class_aps.append(interpolated_ap(precision, recall))
        ap_per_iou[thr] = float(np.mean(class_aps)) if class_aps else 0.0
        curves[thr] = _pr([r[0] for r in records], [r[1] for r in records], n_gt)
        if abs(thr - 0.5) < 1e-9:
            recall50 = sum(r[1] for r in records) / n_gt if n_gt else 0.0

    ap = float(np.mean(list(ap_per_iou.values()))) if ap_per_iou else 0.0
    ap50 = next((v for k, v in ap_per_iou.items() if abs(k - 0.5) < 1e-9), 0.0)
    return DetEvalReport(ap, ap50, recall50, f1_from_ap_recall(ap50, recall50), ap_per_iou, curves)


# -- classification --------------------------------------------------------


@dataclass
class ClsEvalReport:
    confusion: np.ndarray
    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    sensitivity: float
    specificity: float
    roc: tuple[np.ndarray, np.ndarray] | None = None
    auc: float | None = None

    def to_dict(self) -> dict:
        return {
            "confusion": self.confusion.tolist(),
            "accuracy": self.accuracy,
            "precision": self.precision.tolist(),
            "recall": self.recall.tolist(),
            "f1": self.f1.tolist(),
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "auc": self.auc,
        }


def roc_curve(binary_labels, scores) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(fpr, tpr, thresholds), sweeping unique scores plus +/-inf; positive iff score >= t."""
    y = np.asarray(binary_labels, dtype=bool)
    s = np.asarray(scores, dtype=np.float64)
    thresholds = np.concatenate([[np.inf], np.unique(s)[::-1], [-np.inf]])
    n_pos, n_neg = int(y.sum()), int((~y).sum())
    order = np.argsort(-s, kind="stable")
    s_sorted, y_sorted = s[order], y[order]
    ctp = np.concatenate([[0], np.cumsum(y_sorted)])
    cfp = np.concatenate([[0], np.cumsum(~y_sorted)])
    # number of samples with score >= t
    k = np.searchsorted(-s_sorted, -thresholds, side="right")
    tpr = ctp[k] / n_pos if n_pos else np.zeros(len(k))
    fpr = cfp[k] / n_neg if n_neg else np.zeros(len(k))
    return fpr, tpr, thresholds


def auc_trapezoid(fpr, tpr) -> float:
    fpr, tpr = np.asarray(fpr), np.asarray(tpr)
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def evaluate_classification(labels, predicted, scores=None, num_classes: int | None = None,
                            positive_class: int = 1) -> ClsEvalReport:
    """Confusion matrix (rows = truth) plus binary ROC/AUC for ``positive_class``."""
    labels = np.asarray(labels, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if labels.size == 0:
        raise ValueError("empty input")
    if labels.shape != predicted.shape:
        raise ValueError("labels and predictions differ in length")
    k = num_classes or int(max(labels.max(), predicted.max(), positive_class) + 1)
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (labels, predicted), 1)
    diag = np.diag(confusion).astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.nan_to_num(diag / confusion.sum(axis=0))
        recall = np.nan_to_num(diag / confusion.sum(axis=1))
        f1 = np.nan_to_num(2 * precision * recall / (precision + recall))
    truth = labels == positive_class
    guess = predicted == positive_class
    tp, fn = int((truth & guess).sum()), int((truth & ~guess).sum())
    tn, fp = int((~truth & ~guess).sum()), int((~truth & guess).sum())
    report = ClsEvalReport(
        confusion,
        float(diag.sum() / labels.size),
        precision,
        recall,
        f1,
        tp / (tp + fn) if tp + fn else 0.0,
        tn / (tn + fp) if tn + fp else 0.0,
    )
    if scores is not None:
        scores = np.asarray(scores, dtype=np.float64)
        if scores.shape != labels.shape:
            raise ValueError("scores and labels differ in length")
        fpr, tpr, _ = roc_curve(truth, scores)
        report.roc = (fpr, tpr)
        report.auc = auc_trapezoid(fpr, tpr)
    return report


# -- SSIM ------------------------------------------------------------------


@dataclass(frozen=True)
class SsimParams:
    dynamic_range: float = 255.0

    def __post_init__(self):
        if self.dynamic_range <= 0:
            raise ValueError("dynamic_range must be positive")

    @property
    def c1(self) -> float:
        return (0.01 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (0.03 * self.dynamic_range) ** 2


def to_gray(image) -> np.ndarray:
    a = np.asarray(image, dtype=np.float64)
    if a.ndim == 3 and a.shape[-1] == 3:
        return a @ np.array([0.299, 0.587, 0.114])
    if a.ndim == 3 and a.shape[-1] == 1:
        return a[..., 0]
    return a


def ssim(x, y, params: SsimParams = SsimParams()) -> float:
    """Whole-image SSIM from global means, variances and covariance."""
    gx, gy = to_gray(x), to_gray(y)
    if gx.shape != gy.shape:
        raise ValueError(f"shape mismatch: {np.shape(x)} vs {np.shape(y)}")
    mx, my = gx.mean(), gy.mean()
    dx, dy = gx - mx, gy - my
    vx, vy = np.mean(dx * dx), np.mean(dy * dy)
    cov = np.mean(dx * dy)
    c1, c2 = params.c1, params.c2
    return float(((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2)))
