"""Threshold-free OOD metrics, classification accuracy and timing.

Score convention for auroc/fpr_at_tpr: higher = more OOD (OOD samples are
the positives). Callers negate baseline scores that natively rank the other
way before calling in.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from ._validation import check_scores


def auroc(id_scores, ood_scores) -> float:
    """Rank-based AUROC: P(ood > id) + 0.5 * P(tie), ties share credit."""
    id_scores = check_scores(id_scores, "id_scores")
    ood_scores = check_scores(ood_scores, "ood_scores")
    combined = np.concatenate([id_scores, ood_scores])
    ranks = rankdata(combined)
    n_id, n_ood = len(id_scores), len(ood_scores)
    rank_sum = ranks[n_id:].sum()
    u = rank_sum - n_ood * (n_ood + 1) / 2.0
    return float(u / (n_id * n_ood))


def aupr(scores, positive_labels) -> float:
    """Step-interpolated area under the precision-recall curve.

    Higher scores rank as more positive; tied scores are processed as one
    threshold step.
    """
    scores = check_scores(scores, "scores")
    positives = np.asarray(positive_labels, dtype=bool)
    if positives.shape != scores.shape:
        raise ValueError("scores and positive_labels must have equal length")
    n_pos = int(positives.sum())
    if n_pos == 0:
        raise ValueError("aupr needs at least one positive sample")

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_pos = positives[order]
    tp = np.cumsum(sorted_pos)
    fp = np.cumsum(~sorted_pos)
    # Keep only the last index of each tied-score block.
    block_end = np.flatnonzero(np.diff(sorted_scores) != 0)
    idx = np.append(block_end, len(scores) - 1)

    area = 0.0
    prev_recall = 0.0
    for i in idx:
        precision = tp[i] / (tp[i] + fp[i])
        recall = tp[i] / n_pos
        area += (recall - prev_recall) * precision
        prev_recall = recall
    return float(area)


def fpr_at_tpr(id_scores, ood_scores, tpr: float = 0.95) -> float:
    """Fraction of ID samples above the cut that recalls `tpr` of the OOD set.

    The cut is the highest threshold at which at least ceil(tpr * n_ood)
    OOD scores are kept (score >= threshold counts as detected).
    """
    id_scores = check_scores(id_scores, "id_scores")
    ood_scores = check_scores(ood_scores, "ood_scores")
    if not (0 < tpr <= 1):
        raise ValueError("tpr must be in (0, 1]")
    k = min(len(ood_scores), max(1, math.ceil(tpr * len(ood_scores))))
    threshold = np.sort(ood_scores)[len(ood_scores) - k]
    return float(np.mean(id_scores >= threshold))


def classification_report(predictions, labels, n_classes: int = 3):
    """Per-class accuracy and confusion matrix (rows = true, cols = predicted)."""
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if predictions.shape != labels.shape:
        raise ValueError("predictions and labels must have equal length")
    if np.any(labels < 0) or np.any(labels >= n_classes):
        raise ValueError("label out of range")
    if np.any(predictions < 0) or np.any(predictions >= n_classes):
        raise ValueError("prediction out of range")
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    for t, p in zip(labels, predictions):
        confusion[t, p] += 1
    row_sums = confusion.sum(axis=1)
    per_class = np.divide(
        np.diag(confusion),
        row_sums,
        out=np.zeros(n_classes, dtype=np.float64),
        where=row_sums > 0,
    )
    return per_class, confusion


@dataclass(frozen=True)
class TimingResult:
    """Wall-clock seconds for repeated evaluation passes."""

    seconds: float  # mean over runs
    runs: tuple
    n_samples: int

    @property
    def std(self) -> float:
        return float(np.std(self.runs))


def measure_test_time(eval_fn, n_samples: int, repeats: int = 3) -> TimingResult:
    """Time eval_fn() over the full evaluation set, repeated for stability."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    runs = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        eval_fn()
        runs.append(time.perf_counter() - t0)
    return TimingResult(seconds=float(np.mean(runs)), runs=tuple(runs), n_samples=n_samples)


@dataclass
class EvaluationReport:
    """Per-class OOD metrics, activity accuracy and timing for one run."""

    per_class: dict = field(default_factory=dict)  # class -> {auroc, aupr_in, aupr_out, fpr95}
    baselines: dict = field(default_factory=dict)  # method -> class -> metrics
    accuracy: dict = field(default_factory=dict)  # class -> accuracy
    average_accuracy: float = 0.0
    average_auroc: float = 0.0
    confusion: list = field(default_factory=list)
    detection: dict = field(default_factory=dict)
    test_time: float = 0.0

    def to_dict(self, include_timing: bool = True) -> dict:
        out = {
            "per_class": self.per_class,
            "baselines": self.baselines,
            "accuracy": self.accuracy,
            "average_accuracy": self.average_accuracy,
            "average_auroc": self.average_auroc,
            "confusion": self.confusion,
            "detection": self.detection,
        }
        if include_timing:
            out["test_time"] = self.test_time
        return out
