"""Static ROC / PR / confusion-matrix figures from evaluation outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .labels import ID_KINDS, KIND_TO_CODE


def roc_points(id_scores, ood_scores):
    """FPR/TPR sweep with higher score = more OOD (OOD positive)."""
    id_scores = np.asarray(id_scores, dtype=np.float64)
    ood_scores = np.asarray(ood_scores, dtype=np.float64)
    thresholds = np.unique(np.concatenate([id_scores, ood_scores]))[::-1]
    fpr = [0.0]
    tpr = [0.0]
    for t in thresholds:
        fpr.append(np.mean(id_scores >= t))
        tpr.append(np.mean(ood_scores >= t))
    fpr.append(1.0)
    tpr.append(1.0)
    return np.array(fpr), np.array(tpr)


def pr_points(scores, positives):
    """Precision/recall sweep with higher score = more positive."""
    scores = np.asarray(scores, dtype=np.float64)
    positives = np.asarray(positives, dtype=bool)
    order = np.argsort(-scores, kind="stable")
    sorted_pos = positives[order]
    tp = np.cumsum(sorted_pos)
    fp = np.cumsum(~sorted_pos)
    precision = tp / (tp + fp)
    recall = tp / positives.sum()
    return recall, precision


def render_plots(scores_by_method: dict, y: np.ndarray, confusion, out_dir) -> list[Path]:
    """Write ROC and PR figures per ID class plus the confusion matrix.

    scores_by_method maps method name to OOD-positive scores aligned with y.
    Returns the written paths.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    y = np.asarray(y, dtype=np.int64)
    id_codes = [KIND_TO_CODE[k] for k in ID_KINDS]
    ood_mask = ~np.isin(y, id_codes)
    written = []

    for kind in ID_KINDS:
        cls_mask = y == KIND_TO_CODE[kind]
        fig, axes = plt.subplots(1, 2, figsize=(10, 4))
        for method, scores in scores_by_method.items():
            scores = np.asarray(scores, dtype=np.float64)
            fpr, tpr = roc_points(scores[cls_mask], scores[ood_mask])
            axes[0].plot(fpr, tpr, label=method)
            merged = np.concatenate([scores[cls_mask], scores[ood_mask]])
            is_id = np.concatenate(
                [np.ones(cls_mask.sum(), bool), np.zeros(ood_mask.sum(), bool)]
            )
            recall, precision = pr_points(-merged, is_id)
            axes[1].plot(recall, precision, label=method)
        axes[0].plot([0, 1], [0, 1], "k--", linewidth=0.8)
        axes[0].set_xlabel("FPR")
        axes[0].set_ylabel("TPR (OOD recall)")
        axes[0].set_title(f"ROC vs OOD: {kind}")
        axes[0].legend(fontsize=8)
        axes[1].set_xlabel("Recall (ID)")
        axes[1].set_ylabel("Precision")
        axes[1].set_title(f"PR (ID positive): {kind}")
        fig.tight_layout()
        path = out_dir / f"roc_pr_{kind}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    confusion = np.asarray(confusion)
    fig, ax = plt.subplots(figsize=(4, 3.5))
    im = ax.imshow(confusion, cmap="Blues")
    ax.set_xticks(range(len(ID_KINDS)), ID_KINDS)
    ax.set_yticks(range(len(ID_KINDS)), ID_KINDS)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    for i in range(confusion.shape[0]):
        for j in range(confusion.shape[1]):
            ax.text(j, i, str(confusion[i, j]), ha="center", va="center", fontsize=9)
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    path = out_dir / "confusion.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written
