"""CSV dumps and matplotlib figures for PR and ROC curves."""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import ClsEvalReport, DetEvalReport  # noqa: E402

# no timestamps / version strings, so repeated runs write identical bytes
_PNG_METADATA = {"Software": None}


def write_pr_csv(report: DetEvalReport, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iou", "rank", "precision", "recall"])
        for iou, (precision, recall) in report.pr_curves.items():
            for i, (p, r) in enumerate(zip(precision, recall)):
                writer.writerow([f"{iou:.2f}", i, f"{p:.6f}", f"{r:.6f}"])


def write_roc_csv(report: ClsEvalReport, path: str | os.PathLike) -> None:
    if report.roc is None:
        raise ValueError("report has no ROC curve (scores were not given)")
    fpr, tpr = report.roc
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fpr", "tpr"])
        for f, t in zip(fpr, tpr):
            writer.writerow([f"{f:.6f}", f"{t:.6f}"])


def plot_pr_curves(report: DetEvalReport, path: str | os.PathLike, ious=(0.5, 0.75, 0.95)) -> None:
    fig, ax = plt.subplots(figsize=(5, 4))
    for iou in ious:
        curve = next((v for k, v in report.pr_curves.items() if abs(k - iou) < 1e-9), None)
        if curve is None:
            continue
        precision, recall = curve
        ax.step(recall, precision, where="post", label=f"IoU {iou:.2f}")
    ax.set_xlim(0, 1.02)
    ax.set_ylim(0, 1.02)
    ax.set_xlabel("Recall")
    ax.set_ylabel("Precision")
    ax.set_title(f"AP={report.ap:.3f}  AP50={report.ap50:.3f}  F1={report.f1:.3f}")
    ax.legend(loc="lower left")
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_PNG_METADATA)
    plt.close(fig)


def plot_roc(report: ClsEvalReport, path: str | os.PathLike) -> None:
    if report.roc is None:
        raise ValueError("report has no ROC curve (scores were not given)")
    fpr, tpr = report.roc
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.plot(fpr, tpr, lw=1.5, label=f"AUC = {report.auc:.3f}")
    ax.plot([0, 1], [0, 1], ls="--", color="0.6", lw=1)
    ax.set_xlabel("False positive rate")
    ax.set_ylabel("True positive rate")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_PNG_METADATA)
    plt.close(fig)
