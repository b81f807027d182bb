import numpy as np
import pytest
import torch

from harood.losses import (
    LossBreakdown,
    contrastive_loss,
    cross_entropy,
    reconstruction_loss,
    total_stage1_loss,
    triplet_loss,
)

TOL = 1e-6


def _embed(*rows):
    return torch.tensor(rows, dtype=torch.float64)


# ---------------------------------------------------------------------------
# Reconstruction loss


def test_rec_loss_zero_for_perfect_reconstruction():
    x = torch.rand(2, 6, 8, 8, dtype=torch.float64)
    assert float(reconstruction_loss(x, x)) == 0.0


def test_rec_loss_all_ones_vs_all_zeros():
    x = torch.ones(1, 6, 8, 8)
    assert float(reconstruction_loss(x, torch.zeros_like(x))) == pytest.approx(6.0, abs=TOL)


def test_rec_loss_batch_mean():
    x = torch.ones(2, 6, 8, 8)
    recon = x.clone()
    recon[1] = 0.0  # second sample fully wrong, first perfect
    assert float(reconstruction_loss(x, recon)) == pytest.approx(3.0, abs=TOL)


def test_rec_loss_shape_mismatch():
    with pytest.raises(ValueError):
        reconstruction_loss(torch.ones(1, 6, 8, 8), torch.ones(1, 6, 8, 4))


# ---------------------------------------------------------------------------
# Triplet loss


def test_triplet_zero_when_margin_satisfied():
    e_a = _embed([0.0, 0.0])
    e_n = _embed([5.0, 0.0])
    assert float(triplet_loss(e_a, e_a, e_n, margin=2.0)) == pytest.approx(0.0, abs=TOL)


def test_triplet_degenerate_collapse_equals_margin():
    e = _embed([0.3, -0.7, 1.1])
    assert float(triplet_loss(e, e, e, margin=2.0)) == pytest.approx(2.0, abs=TOL)


def test_triplet_hand_value():
    # d_ap = 3, d_an = 1 -> 3 - 1 + 2 = 4
    e_a = _embed([0.0])
    e_p = _embed([3.0])
    e_n = _embed([1.0])
    assert float(triplet_loss(e_a, e_p, e_n, margin=2.0)) == pytest.approx(4.0, abs=TOL)


def test_triplet_batch_mean_and_nonnegative():
    rng = np.random.default_rng(0)
    e_a, e_p, e_n = (torch.tensor(rng.normal(size=(16, 8))) for _ in range(3))
    val = float(triplet_loss(e_a, e_p, e_n))
    assert val >= 0.0


# ---------------------------------------------------------------------------
# Contrastive loss


def test_contrastive_similar_coincident_is_zero():
    e = _embed([1.0, 2.0])
    y = torch.tensor([0.0])
    assert float(contrastive_loss(e, e, y, margin=2.0)) == 0.0


def test_contrastive_dissimilar_separated_is_zero():
    e1 = _embed([0.0, 0.0])
    e2 = _embed([3.0, 0.0])
    y = torch.tensor([1.0])
    assert float(contrastive_loss(e1, e2, y, margin=2.0)) == pytest.approx(0.0, abs=TOL)


def test_contrastive_dissimilar_coincident_is_margin_squared():
    e = _embed([0.5, -0.5, 2.0])
    y = torch.tensor([1.0])
    assert float(contrastive_loss(e, e, y, margin=2.0)) == pytest.approx(4.0, abs=TOL)


def test_contrastive_rejects_bad_labels():
    e = _embed([0.0])
    with pytest.raises(ValueError, match="0"):
        contrastive_loss(e, e, torch.tensor([0.5]))


# ---------------------------------------------------------------------------
# Cross entropy


def test_cross_entropy_saturated_correct():
    logits = torch.tensor([[30.0, 0.0, 0.0]])
    labels = torch.tensor([0])
    assert float(cross_entropy(logits, labels)) < 1e-9


def test_cross_entropy_uniform_is_log3():
    logits = torch.zeros(1, 3)
    for label in (0, 1, 2):
        val = float(cross_entropy(logits, torch.tensor([label])))
        assert val == pytest.approx(np.log(3.0), abs=TOL)


def test_cross_entropy_shift_invariance():
    logits = torch.tensor([[1.2, -0.4, 0.9]], dtype=torch.float64)
    labels = torch.tensor([2])
    base = float(cross_entropy(logits, labels))
    shifted = float(cross_entropy(logits + 17.5, labels))
    assert abs(base - shifted) < 1e-9


def test_cross_entropy_label_out_of_range():
    with pytest.raises(ValueError, match="range"):
        cross_entropy(torch.zeros(1, 3), torch.tensor([3]))


# ---------------------------------------------------------------------------
# Total loss and invariants


def test_total_additivity_of_hand_values():
    l_rec = torch.tensor(6.0)
    l_tri = torch.tensor(4.0)
    l_con = torch.tensor(4.0)
    total, breakdown = total_stage1_loss(l_rec, l_tri, l_con, 1, True)
    assert float(total) == pytest.approx(14.0, abs=TOL)
    assert breakdown.total == pytest.approx(14.0, abs=TOL)


def test_total_without_contrastive():
    total, breakdown = total_stage1_loss(torch.tensor(1.5), torch.tensor(2.5), None, 4, False)
    assert float(total) == pytest.approx(4.0, abs=TOL)
    assert breakdown.l_con == 0.0
    assert not breakdown.contrastive_active
    assert isinstance(breakdown, LossBreakdown)


def test_total_all_perfect_is_zero():
    zero = torch.tensor(0.0)
    total, _ = total_stage1_loss(zero, zero, zero, 2, True)
    assert float(total) == 0.0


def test_batch_permutation_invariance():
    rng = np.random.default_rng(1)
    e_a, e_p, e_n = (torch.tensor(rng.normal(size=(10, 6))) for _ in range(3))
    perm = torch.tensor(rng.permutation(10))
    assert float(triplet_loss(e_a, e_p, e_n)) == pytest.approx(
        float(triplet_loss(e_a[perm], e_p[perm], e_n[perm])), rel=1e-12
    )
    y = torch.tensor((rng.random(10) < 0.5).astype(np.float64))
    assert float(contrastive_loss(e_a, e_p, y)) == pytest.approx(
        float(contrastive_loss(e_a[perm], e_p[perm], y[perm])), rel=1e-12
    )
    x = torch.tensor(rng.random((10, 6, 4, 4)))
    r = torch.tensor(rng.random((10, 6, 4, 4)))
    assert float(reconstruction_loss(x, r)) == pytest.approx(
        float(reconstruction_loss(x[perm], r[perm])), rel=1e-12
    )


def test_rigid_rotation_invariance():
    # Distance-based losses must not change under a common orthogonal map.
    rng = np.random.default_rng(2)
    q, _ = np.linalg.qr(rng.normal(size=(6, 6)))
    rot = torch.tensor(q)
    e_a, e_p, e_n = (torch.tensor(rng.normal(size=(12, 6))) for _ in range(3))
    y = torch.tensor((rng.random(12) < 0.5).astype(np.float64))
    assert float(triplet_loss(e_a, e_p, e_n)) == pytest.approx(
        float(triplet_loss(e_a @ rot, e_p @ rot, e_n @ rot)), rel=1e-9
    )
    assert float(contrastive_loss(e_a, e_p, y)) == pytest.approx(
        float(contrastive_loss(e_a @ rot, e_p @ rot, y)), rel=1e-9
    )


def test_gradients_finite_at_coincident_embeddings():
    e1 = torch.zeros(3, 4, requires_grad=True)
    e2 = torch.zeros(3, 4)
    loss = contrastive_loss(e1, e2, torch.tensor([1.0, 0.0, 1.0]))
    loss.backward()
    assert torch.all(torch.isfinite(e1.grad))
    e_a = torch.zeros(2, 4, requires_grad=True)
    loss = triplet_loss(e_a, torch.zeros(2, 4), torch.zeros(2, 4))
    loss.backward()
    assert torch.all(torch.isfinite(e_a.grad))
