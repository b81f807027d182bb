"""Two-stage training loop and the finite-difference gradient audit.

Stage 1 runs exactly six epochs of joint reconstruction + triplet training,
with the contrastive term active only during the first three; each step
applies one Adamax update. Stage 2 freezes the stage-1 weights, computes
every training embedding once and fits the activity classifier with Adam.
"""

from __future__ import annotations

import copy
import json
import time
from dataclasses import dataclass, field

import numpy as np
import torch

from ._validation import check_labels, check_rdi_batch
from .config import ModelConfig, TrainConfig
from .losses import (
    contrastive_loss,
    cross_entropy,
    reconstruction_loss,
    total_stage1_loss,
    triplet_loss,
)
from .network import ActivityClassifier, HaroodNet
from .store import sample_contrastive_pairs, sample_triplets


def derive_seed(*parts) -> int:
    """Stable 64-bit seed derived from a tuple of integers."""
    ss = np.random.SeedSequence([int(p) & 0xFFFFFFFF for p in parts])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class Stage1Schedule:
    """Six-epoch stage-1 schedule; contrastive term active in the first three."""

    epochs: int = 6
    contrastive_epochs: int = 3
    batch_size: int = 32
    lr: float = 1e-3
    triplet_margin: float = 2.0
    contrastive_margin: float = 2.0
    seed: int = 0

    @classmethod
    def from_train_config(cls, cfg: TrainConfig, seed: int) -> "Stage1Schedule":
        return cls(
            epochs=cfg.stage1_epochs,
            contrastive_epochs=cfg.contrastive_epochs,
            batch_size=cfg.batch_size,
            lr=cfg.stage1_lr,
            triplet_margin=cfg.triplet_margin,
            contrastive_margin=cfg.contrastive_margin,
            seed=seed,
        )


@dataclass
class TrainingLog:
    """Per-epoch loss record for one training stage."""

    stage: str
    seed: int
    config: dict = field(default_factory=dict)
    epochs: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "seed": self.seed,
            "config": self.config,
            "epochs": self.epochs,
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _split_channels(x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    return x[:, 0:1], x[:, 1:2]


def train_stage1(
    X_train: np.ndarray,
    y_train: np.ndarray,
    X_oe: np.ndarray,
    model_config: ModelConfig | None = None,
    schedule: Stage1Schedule | None = None,
) -> tuple[HaroodNet, TrainingLog]:
    """Train the encoder-decoder pairs and embedding head.

    X_train/y_train: ID samples shaped (n, 2, H, W) with labels in {0,1,2};
    X_oe: outlier-exposure samples for the contrastive term. Deterministic
    given (inputs, schedule.seed).
    """
    model_config = model_config or ModelConfig()
    schedule = schedule or Stage1Schedule()
    X_train = check_rdi_batch(X_train, "X_train")
    y_train = check_labels(y_train, len(X_train), "y_train")
    if len(np.unique(y_train)) < 3:
        raise ValueError("stage-1 training needs all three ID classes present")
    if schedule.contrastive_epochs > 0:
        X_oe = check_rdi_batch(X_oe, "X_oe")
        if len(X_oe) < 2:
            raise ValueError("contrastive epochs require a non-empty oe split")

    torch.manual_seed(derive_seed(schedule.seed, 1))
    net = HaroodNet(model_config)
    opt = torch.optim.Adamax(net.parameters(), lr=schedule.lr)

    Xt = torch.from_numpy(X_train)
    pool = torch.from_numpy(np.concatenate([X_train, X_oe], axis=0))
    pool_is_id = np.concatenate(
        [np.ones(len(X_train), dtype=bool), np.zeros(len(X_oe), dtype=bool)]
    )

    n_batches = max(1, len(X_train) // schedule.batch_size)
    log = TrainingLog(
        stage="stage1",
        seed=schedule.seed,
        config={
            "epochs": schedule.epochs,
            "contrastive_epochs": schedule.contrastive_epochs,
            "batch_size": schedule.batch_size,
            "lr": schedule.lr,
            "n_train": int(len(X_train)),
            "n_oe": int(len(X_oe)),
            "batches_per_epoch": n_batches,
            "optimizer": "adamax",
        },
    )

    for epoch in range(schedule.epochs):
        active = epoch < schedule.contrastive_epochs
        t0 = time.perf_counter()
        sums = {"l_rec": 0.0, "l_tri": 0.0, "l_con": 0.0, "total": 0.0}
        for step in range(n_batches):
            tb = sample_triplets(
                y_train, schedule.batch_size, derive_seed(schedule.seed, 2, epoch, step)
            )
            members = []
            for idx in (tb.anchors, tb.positives, tb.negatives):
                x = Xt[idx]
                members.append(net.embed_pair(*_split_channels(x)) + (x,))
            originals = torch.cat([m[3] for m in members], dim=1)
            recons = torch.cat(
                [torch.cat([m[0], m[1]], dim=1) for m in members], dim=1
            )
            l_rec = reconstruction_loss(originals, recons)
            l_tri = triplet_loss(
                members[0][2], members[1][2], members[2][2], schedule.triplet_margin
            )

            l_con = None
            if active:
                pb = sample_contrastive_pairs(
                    pool_is_id, schedule.batch_size, derive_seed(schedule.seed, 3, epoch, step)
                )
                x1, x2 = pool[pb.first], pool[pb.second]
                e1 = net.contrastive_embed(*_split_channels(x1))
                e2 = net.contrastive_embed(*_split_channels(x2))
                l_con = contrastive_loss(
                    e1, e2, torch.from_numpy(pb.y), schedule.contrastive_margin
                )

            total, breakdown = total_stage1_loss(
                l_rec, l_tri, l_con, schedule.batch_size, active
            )
            if not torch.isfinite(total):
                raise RuntimeError(
                    f"non-finite stage-1 loss at epoch {epoch} step {step}: "
                    f"{breakdown.to_dict()}"
                )
            opt.zero_grad(set_to_none=True)
            total.backward()
            opt.step()
            for key in sums:
                sums[key] += getattr(breakdown, key)

        log.epochs.append(
            {
                "epoch": epoch,
                "l_rec": sums["l_rec"] / n_batches,
                "l_tri": sums["l_tri"] / n_batches,
                "l_con": sums["l_con"] / n_batches,
                "total": sums["total"] / n_batches,
                "contrastive_active": active,
                "wall_time": time.perf_counter() - t0,
            }
        )
    return net, log


@torch.no_grad()
def compute_embeddings(net: HaroodNet, X: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """Embed every sample once with frozen stage-1 weights."""
    X = check_rdi_batch(X, "X")
    out = []
    for start in range(0, len(X), batch_size):
        x = torch.from_numpy(X[start : start + batch_size])
        out.append(net.embed(*_split_channels(x)).numpy())
    return np.concatenate(out, axis=0)


def train_stage2(
    net: HaroodNet,
    X_train: np.ndarray,
    y_train: np.ndarray,
    model_config: ModelConfig | None = None,
    epochs: int = 20,
    batch_size: int = 32,
    lr: float = 1e-3,
    seed: int = 0,
) -> tuple[ActivityClassifier, TrainingLog]:
    """Fit the activity classifier on frozen stage-1 embeddings."""
    model_config = model_config or ModelConfig()
    y_train = check_labels(y_train, len(X_train), "y_train")
    if np.any(y_train < 0) or np.any(y_train > 2):
        raise ValueError("stage-2 labels must be activity classes 0..2")

    embeddings = compute_embeddings(net, X_train)
    E = torch.from_numpy(embeddings)
    y = torch.from_numpy(y_train)

    torch.manual_seed(derive_seed(seed, 4))
    classifier = ActivityClassifier(model_config.embed_dim, model_config.classifier_hidden)
    opt = torch.optim.Adam(classifier.parameters(), lr=lr)

    n = len(E)
    log = TrainingLog(
        stage="stage2",
        seed=seed,
        config={
            "epochs": epochs,
            "batch_size": batch_size,
            "lr": lr,
            "n_train": int(n),
            "optimizer": "adam",
        },
    )
    for epoch in range(epochs):
        t0 = time.perf_counter()
        order = np.random.default_rng(derive_seed(seed, 5, epoch)).permutation(n)
        epoch_loss, n_steps = 0.0, 0
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            logits = classifier(E[idx])
            loss = cross_entropy(logits, y[idx])
            if not torch.isfinite(loss):
                raise RuntimeError(f"non-finite stage-2 loss at epoch {epoch}")
            opt.zero_grad(set_to_none=True)
            loss.backward()
            opt.step()
            epoch_loss += float(loss.detach())
            n_steps += 1
        with torch.no_grad():
            acc = float((classifier(E).argmax(dim=1) == y).float().mean())
        log.epochs.append(
            {
                "epoch": epoch,
                "loss": epoch_loss / max(n_steps, 1),
                "train_accuracy": acc,
                "wall_time": time.perf_counter() - t0,
            }
        )
    return classifier, log


# ---------------------------------------------------------------------------
# Finite-difference gradient audit


@dataclass(frozen=True)
class AuditResult:
    per_loss: dict
    max_relative_error: float


def _relative_error(fd: float, an: float) -> float:
    scale = max(abs(fd), abs(an))
    if scale < 1e-4:
        return abs(fd - an)  # absolute comparison for near-zero gradients
    return abs(fd - an) / scale


def finite_difference_audit(
    net: HaroodNet,
    classifier: ActivityClassifier | None = None,
    n_params: int = 32,
    seed: int = 0,
    step: float = 1e-3,
    batch_size: int = 3,
    image_size: int = 64,
) -> AuditResult:
    """Compare autograd gradients with central finite differences.

    Runs each loss on a fixed random batch in double precision, samples
    n_params random parameter entries and reports the worst relative
    disagreement per loss term. Deterministic given the seed.
    """
    gen = torch.Generator().manual_seed(derive_seed(seed, 6))
    net64 = copy.deepcopy(net).double()
    if classifier is None:
        torch.manual_seed(derive_seed(seed, 7))
        classifier = ActivityClassifier(net.config.embed_dim, 8)
    clf64 = copy.deepcopy(classifier).double()

    def rand_img():
        return torch.rand(
            batch_size, 1, image_size, image_size, generator=gen, dtype=torch.float64
        )

    xa_ma, xa_mi = rand_img(), rand_img()
    xp_ma, xp_mi = rand_img(), rand_img()
    xn_ma, xn_mi = rand_img(), rand_img()
    pair_y = torch.arange(batch_size, dtype=torch.float64) % 2
    labels = torch.arange(batch_size) % 3
    emb_in = torch.rand(
        batch_size, net.config.embed_dim, generator=gen, dtype=torch.float64
    )

    def loss_rec():
        members = []
        for ma, mi in ((xa_ma, xa_mi), (xp_ma, xp_mi), (xn_ma, xn_mi)):
            rec_ma, rec_mi, _ = net64.embed_pair(ma, mi)
            members.append((torch.cat([ma, mi], 1), torch.cat([rec_ma, rec_mi], 1)))
        originals = torch.cat([m[0] for m in members], 1)
        recons = torch.cat([m[1] for m in members], 1)
        return reconstruction_loss(originals, recons)

    def loss_tri():
        e_a = net64.embed(xa_ma, xa_mi)
        e_p = net64.embed(xp_ma, xp_mi)
        e_n = net64.embed(xn_ma, xn_mi)
        return triplet_loss(e_a, e_p, e_n)

    def loss_con():
        e1 = net64.contrastive_embed(xa_ma, xa_mi)
        e2 = net64.contrastive_embed(xp_ma, xp_mi)
        return contrastive_loss(e1, e2, pair_y)

    def loss_xent():
        return cross_entropy(clf64(emb_in), labels)

    cases = {
        "reconstruction": (loss_rec, net64),
        "triplet": (loss_tri, net64),
        "contrastive": (loss_con, net64),
        "cross_entropy": (loss_xent, clf64),
    }

    rng = np.random.default_rng(derive_seed(seed, 8))
    per_loss = {}
    for name, (closure, module) in cases.items():
        params = list(module.parameters())
        loss = closure()
        grads = torch.autograd.grad(loss, params, allow_unused=True)
        grads = [
            torch.zeros_like(p) if g is None else g for p, g in zip(params, grads)
        ]
        worst = 0.0
        for _ in range(n_params):
            pi = int(rng.integers(0, len(params)))
            flat = params[pi].detach().view(-1)
            j = int(rng.integers(0, flat.numel()))
            analytic = float(grads[pi].view(-1)[j])
            with torch.no_grad():
                orig = float(flat[j])
                flat[j] = orig + step
                up = float(closure())
                flat[j] = orig - step
                down = float(closure())
                flat[j] = orig
            fd = (up - down) / (2.0 * step)
            worst = max(worst, _relative_error(fd, analytic))
        per_loss[name] = worst
    return AuditResult(per_loss=per_loss, max_relative_error=max(per_loss.values()))
