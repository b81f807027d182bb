"""Stage-1 loss terms and stage-2 cross-entropy.

All distances are Euclidean with a tiny epsilon inside the square root so
the gradient stays finite when two embeddings coincide; the epsilon is small
enough that hand-computed loss values hold to well below 1e-6.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F

# Guard inside sqrt; keeps d(0) = 1e-8, which perturbs margin terms by ~4e-8.
DISTANCE_EPS = 1e-16

TRIPLET_MARGIN = 2.0
CONTRASTIVE_MARGIN = 2.0


def embedding_distance(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Guarded per-row L2 distance between two embedding batches."""
    return torch.sqrt(((a - b) ** 2).sum(dim=-1) + DISTANCE_EPS)


def reconstruction_loss(originals: torch.Tensor, reconstructions: torch.Tensor) -> torch.Tensor:
    """Batch-mean of the summed per-image mean squared errors.

    Expects (b, k, H, W) with k image slots per sample; for triplet training
    k = 6 (anchor/positive/negative x macro/micro). Zero iff every
    reconstruction is exact.
    """
    if originals.shape != reconstructions.shape:
        raise ValueError(
            f"shape mismatch: {tuple(originals.shape)} vs {tuple(reconstructions.shape)}"
        )
    if originals.dim() != 4:
        raise ValueError("expected (batch, images, rows, cols)")
    per_image = ((originals - reconstructions) ** 2).mean(dim=(-2, -1))
    return per_image.sum(dim=1).mean()


def triplet_loss(
    e_a: torch.Tensor,
    e_p: torch.Tensor,
    e_n: torch.Tensor,
    margin: float = TRIPLET_MARGIN,
) -> torch.Tensor:
    """mean over batch of max(||e_a - e_p|| - ||e_a - e_n|| + margin, 0)."""
    if not (e_a.shape == e_p.shape == e_n.shape):
        raise ValueError("triplet embedding batches must share one shape")
    d_ap = embedding_distance(e_a, e_p)
    d_an = embedding_distance(e_a, e_n)
    return torch.clamp(d_ap - d_an + margin, min=0.0).mean()


def contrastive_loss(
    e1: torch.Tensor,
    e2: torch.Tensor,
    y: torch.Tensor,
    margin: float = CONTRASTIVE_MARGIN,
) -> torch.Tensor:
    """Margin contrastive loss with y = 0 for similar pairs, 1 for dissimilar.

    mean over batch of (1-y) * d^2  +  y * max(0, margin - d)^2.
    """
    if e1.shape != e2.shape:
        raise ValueError("pair embedding batches must share one shape")
    y = y.to(e1.dtype)
    if torch.any((y != 0) & (y != 1)):
        raise ValueError("pair labels must be 0 (similar) or 1 (dissimilar)")
    sq = ((e1 - e2) ** 2).sum(dim=-1)  # exact zero at coincidence
    d = embedding_distance(e1, e2)
    loss = (1.0 - y) * sq + y * torch.clamp(margin - d, min=0.0) ** 2
    return loss.mean()


def cross_entropy(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean negative log softmax probability of the true class."""
    if logits.dim() != 2:
        raise ValueError("logits must be (batch, n_classes)")
    labels = labels.long()
    if torch.any(labels < 0) or torch.any(labels >= logits.shape[1]):
        raise ValueError("label out of range for the given logits")
    return F.cross_entropy(logits, labels)


@dataclass(frozen=True)
class LossBreakdown:
    """Scalar stage-1 terms for one batch; l_con is 0 while disabled."""

    l_rec: float
    l_tri: float
    l_con: float
    total: float
    batch_size: int
    contrastive_active: bool

    def to_dict(self) -> dict:
        return {
            "l_rec": self.l_rec,
            "l_tri": self.l_tri,
            "l_con": self.l_con,
            "total": self.total,
            "batch_size": self.batch_size,
            "contrastive_active": self.contrastive_active,
        }


def total_stage1_loss(
    l_rec: torch.Tensor,
    l_tri: torch.Tensor,
    l_con: torch.Tensor | None,
    batch_size: int,
    contrastive_enabled: bool,
) -> tuple[torch.Tensor, LossBreakdown]:
    """Sum the active terms; returns the differentiable total plus a record."""
    total = l_rec + l_tri
    con_value = 0.0
    if contrastive_enabled:
        if l_con is None:
            raise ValueError("contrastive term enabled but not provided")
        total = total + l_con
        con_value = float(l_con.detach())
    breakdown = LossBreakdown(
        l_rec=float(l_rec.detach()),
        l_tri=float(l_tri.detach()),
        l_con=con_value,
        total=float(total.detach()),
        batch_size=batch_size,
        contrastive_active=contrastive_enabled,
    )
    return total, breakdown
