"""Reconstruction-based OOD scoring, threshold calibration and logit baselines.

The main score is the weighted sum of the per-variant reconstruction MSEs
(weight 1 for the macro image, 0.001 for the micro image); higher means more
out-of-distribution. The decision threshold is the smallest calibration
score at which the requested fraction of ID samples is kept; a sample is
declared OOD only when its score exceeds the threshold strictly.

Baselines (MSP, MaxLogit, energy, ODIN) score the stage-2 classifier logits
and natively return "higher = more in-distribution"; callers negate them
before feeding rank metrics that expect the OOD-positive convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from ._validation import check_rdi_batch, check_scores
from .network import ActivityClassifier, HaroodNet

MACRO_WEIGHT = 1.0
MICRO_WEIGHT = 0.001


@dataclass(frozen=True)
class OodScore:
    """Weighted reconstruction error for one sample (higher = more OOD)."""

    value: float
    macro_mse: float
    micro_mse: float


@dataclass(frozen=True)
class Threshold:
    """Score cut calibrated so a target fraction of ID data stays ID."""

    value: float
    target_tpr: float
    n_calibration: int


def harood_score(
    macro_mse: float,
    micro_mse: float,
    macro_weight: float = MACRO_WEIGHT,
    micro_weight: float = MICRO_WEIGHT,
) -> OodScore:
    if macro_mse < 0 or micro_mse < 0:
        raise ValueError("reconstruction errors must be >= 0")
    return OodScore(
        value=macro_weight * macro_mse + micro_weight * micro_mse,
        macro_mse=macro_mse,
        micro_mse=micro_mse,
    )


@torch.no_grad()
def reconstruction_errors(
    net: HaroodNet, X: np.ndarray, batch_size: int = 256
) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample per-image mean squared reconstruction error for both variants."""
    X = check_rdi_batch(X, "X")
    macro, micro = [], []
    for start in range(0, len(X), batch_size):
        x = torch.from_numpy(X[start : start + batch_size])
        x_ma, x_mi = x[:, 0:1], x[:, 1:2]
        rec_ma = net.reconstruct(x_ma, "macro")
        rec_mi = net.reconstruct(x_mi, "micro")
        macro.append(((x_ma - rec_ma) ** 2).mean(dim=(1, 2, 3)).numpy())
        micro.append(((x_mi - rec_mi) ** 2).mean(dim=(1, 2, 3)).numpy())
    return np.concatenate(macro), np.concatenate(micro)


def harood_scores(
    net: HaroodNet,
    X: np.ndarray,
    macro_weight: float = MACRO_WEIGHT,
    micro_weight: float = MICRO_WEIGHT,
    batch_size: int = 256,
) -> np.ndarray:
    """Vectorized OOD score (higher = more OOD) for a batch of samples."""
    macro_mse, micro_mse = reconstruction_errors(net, X, batch_size)
    return macro_weight * macro_mse + micro_weight * micro_mse


def calibrate_threshold(id_scores, target_tpr: float = 0.95) -> Threshold:
    """Smallest score keeping at least the target fraction of ID samples.

    With n calibration scores the threshold is the ceil(target * n)-th
    smallest score, so the realized ID keep-rate is the smallest achievable
    fraction >= target_tpr.
    """
    scores = check_scores(id_scores, "id_scores")
    if not (0 < target_tpr <= 1):
        raise ValueError("target_tpr must be in (0, 1]")
    n = len(scores)
    k = min(n, max(1, math.ceil(target_tpr * n)))
    value = float(np.sort(scores)[k - 1])
    return Threshold(value=value, target_tpr=target_tpr, n_calibration=n)


def detect(score: OodScore | float, threshold: Threshold | float) -> str:
    """'OOD' when the score strictly exceeds the threshold, else 'ID'."""
    value = score.value if isinstance(score, OodScore) else float(score)
    cut = threshold.value if isinstance(threshold, Threshold) else float(threshold)
    return "OOD" if value > cut else "ID"


# ---------------------------------------------------------------------------
# Logit-based baselines (higher = more in-distribution)


def _as_logit_array(logits) -> np.ndarray:
    arr = np.asarray(logits, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError("logits must be (n_classes,) or (batch, n_classes)")
    return arr


def _maybe_scalar(values: np.ndarray, logits) -> np.ndarray | float:
    return float(values[0]) if np.asarray(logits).ndim == 1 else values


def msp_score(logits):
    """Maximum softmax probability."""
    arr = _as_logit_array(logits)
    shifted = arr - arr.max(axis=1, keepdims=True)
    probs = np.exp(shifted)
    probs /= probs.sum(axis=1, keepdims=True)
    return _maybe_scalar(probs.max(axis=1), logits)


def maxlogit_score(logits):
    """Maximum raw logit."""
    arr = _as_logit_array(logits)
    return _maybe_scalar(arr.max(axis=1), logits)


def energy_score(logits, temperature: float = 1.0):
    """Negative energy: T * logsumexp(logits / T)."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    arr = _as_logit_array(logits) / temperature
    m = arr.max(axis=1, keepdims=True)
    lse = (m + np.log(np.exp(arr - m).sum(axis=1, keepdims=True))).squeeze(1)
    return _maybe_scalar(temperature * lse, logits)


@torch.no_grad()
def compute_logits(
    net: HaroodNet, classifier: ActivityClassifier, X: np.ndarray, batch_size: int = 256
) -> np.ndarray:
    """Stage-2 logits for a batch of macro/micro sample pairs."""
    X = check_rdi_batch(X, "X")
    out = []
    for start in range(0, len(X), batch_size):
        x = torch.from_numpy(X[start : start + batch_size])
        emb = net.embed(x[:, 0:1], x[:, 1:2])
        out.append(classifier(emb).numpy())
    return np.concatenate(out, axis=0)


def odin_scores(
    net: HaroodNet,
    classifier: ActivityClassifier,
    X: np.ndarray,
    temperature: float = 1000.0,
    epsilon: float = 0.002,
    batch_size: int = 128,
) -> np.ndarray:
    """ODIN: input perturbation plus temperature scaling on the max softmax.

    The input images are nudged by epsilon * sign of the gradient that
    increases the temperature-scaled max softmax, then re-scored. With
    epsilon = 0 and temperature = 1 this reduces to the MSP score.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    X = check_rdi_batch(X, "X")
    scores = []
    for start in range(0, len(X), batch_size):
        x = torch.from_numpy(X[start : start + batch_size]).clone().requires_grad_(True)
        logits = classifier(net.embed(x[:, 0:1], x[:, 1:2]))
        log_probs = F.log_softmax(logits / temperature, dim=1)
        target = logits.argmax(dim=1)
        nll = -log_probs.gather(1, target[:, None]).sum()
        (grad,) = torch.autograd.grad(nll, x)
        if not torch.all(torch.isfinite(grad)):
            raise RuntimeError("non-finite input gradient in ODIN perturbation")
        with torch.no_grad():
            x_pert = x - epsilon * grad.sign()
            logits_pert = classifier(net.embed(x_pert[:, 0:1], x_pert[:, 1:2]))
            probs = F.softmax(logits_pert / temperature, dim=1)
            scores.append(probs.max(dim=1).values.numpy())
    return np.concatenate(scores).astype(np.float64)
