import hashlib

import numpy as np
import pytest
import torch

from harood import ModelConfig
from harood.losses import contrastive_loss
from harood.network import HaroodNet, module_tensors
from harood.training import (
    Stage1Schedule,
    compute_embeddings,
    finite_difference_audit,
    train_stage1,
    train_stage2,
)

SMALL_MODEL = ModelConfig(encoder_channels=(4, 8), head_channels=(4, 8), embed_dim=16, classifier_hidden=8)


def _toy_data(n_per_class=8, seed=0, size=32):
    rng = np.random.default_rng(seed)
    X, y = [], []
    for c in range(3):
        base = np.zeros((2, size, size), dtype=np.float32)
        base[0, 4 + 6 * c : 10 + 6 * c] = 1.0
        base[1, :, 4 + 6 * c : 10 + 6 * c] = 0.5
        for _ in range(n_per_class):
            X.append(np.clip(base + rng.normal(0, 0.05, base.shape), 0, 1).astype(np.float32))
            y.append(c)
    X_oe = rng.random((6, 2, size, size), dtype=np.float32)
    return np.stack(X), np.array(y), X_oe


def _schedule(seed=0, batch=8):
    return Stage1Schedule(batch_size=batch, seed=seed)


def _weights_digest(module):
    h = hashlib.sha256()
    for name, arr in module_tensors(module).items():
        h.update(name.encode())
        h.update(arr.tobytes())
    return h.hexdigest()


@pytest.fixture(scope="module")
def trained():
    X, y, X_oe = _toy_data()
    net, log = train_stage1(X, y, X_oe, SMALL_MODEL, _schedule(seed=5))
    return X, y, X_oe, net, log


def test_schedule_conformance(trained):
    _, _, _, _, log = trained
    assert len(log.epochs) == 6
    flags = [e["contrastive_active"] for e in log.epochs]
    assert flags == [True, True, True, False, False, False]
    for entry in log.epochs[3:]:
        assert entry["l_con"] == 0.0
    for entry in log.epochs[:3]:
        assert entry["l_con"] > 0.0


def test_loss_improves_over_training(trained):
    _, _, _, _, log = trained
    first = log.epochs[0]["l_rec"] + log.epochs[0]["l_tri"]
    last = log.epochs[-1]["l_rec"] + log.epochs[-1]["l_tri"]
    assert last < first


def test_stage1_determinism():
    X, y, X_oe = _toy_data()
    net1, _ = train_stage1(X, y, X_oe, SMALL_MODEL, _schedule(seed=3))
    net2, _ = train_stage1(X, y, X_oe, SMALL_MODEL, _schedule(seed=3))
    assert _weights_digest(net1) == _weights_digest(net2)
    net3, _ = train_stage1(X, y, X_oe, SMALL_MODEL, _schedule(seed=4))
    assert _weights_digest(net1) != _weights_digest(net3)


def test_stage1_requires_all_classes():
    X, y, X_oe = _toy_data()
    with pytest.raises(ValueError, match="three"):
        train_stage1(X[y != 2], y[y != 2], X_oe, SMALL_MODEL, _schedule())


def test_isolated_contrastive_step_touches_encoders_only():
    torch.manual_seed(0)
    net = HaroodNet(SMALL_MODEL)
    opt = torch.optim.Adamax(net.parameters(), lr=1e-3)
    groups = net.parameter_groups()
    before = {name: p.detach().clone() for name, p in net.named_parameters()}

    g = torch.Generator().manual_seed(1)
    x1 = torch.rand(4, 1, 32, 32, generator=g)
    x2 = torch.rand(4, 1, 32, 32, generator=g)
    loss = contrastive_loss(
        net.contrastive_embed(x1, x1), net.contrastive_embed(x2, x2),
        torch.tensor([0.0, 1.0, 0.0, 1.0]),
    )
    opt.zero_grad(set_to_none=True)
    loss.backward()
    opt.step()

    after = dict(net.named_parameters())
    for name in groups["decoder"] + groups["head"]:
        assert torch.equal(before[name], after[name]), name
    assert any(not torch.equal(before[name], after[name]) for name in groups["encoder"])


def test_stage2_freezes_stage1(trained):
    X, y, _, net, _ = trained
    digest_before = _weights_digest(net)
    clf, log = train_stage2(net, X, y, SMALL_MODEL, epochs=5, batch_size=8, seed=1)
    assert _weights_digest(net) == digest_before
    assert len(log.epochs) == 5
    assert log.epochs[-1]["train_accuracy"] > 1.0 / 3.0


def test_stage2_determinism(trained):
    X, y, _, net, _ = trained
    clf1, _ = train_stage2(net, X, y, SMALL_MODEL, epochs=3, seed=2)
    clf2, _ = train_stage2(net, X, y, SMALL_MODEL, epochs=3, seed=2)
    assert _weights_digest(clf1) == _weights_digest(clf2)


def test_stage2_rejects_ood_labels(trained):
    X, y, _, net, _ = trained
    bad = y.copy()
    bad[0] = 5
    with pytest.raises(ValueError, match="0..2"):
        train_stage2(net, X, bad, SMALL_MODEL, epochs=1)


def test_embeddings_deterministic(trained):
    X, _, _, net, _ = trained
    e1 = compute_embeddings(net, X)
    e2 = compute_embeddings(net, X)
    assert np.array_equal(e1, e2)
    assert e1.shape == (len(X), SMALL_MODEL.embed_dim)


def test_nonfinite_input_aborts():
    X, y, X_oe = _toy_data()
    X = X.copy()
    X[0, 0, 0, 0] = np.nan
    with pytest.raises(ValueError, match="finite"):
        train_stage1(X, y, X_oe, SMALL_MODEL, _schedule())


# ---------------------------------------------------------------------------
# Finite-difference audit


@pytest.fixture(scope="module")
def audit_result():
    torch.manual_seed(4)
    net = HaroodNet(SMALL_MODEL)
    return finite_difference_audit(net, n_params=32, seed=11, image_size=32)


def test_audit_covers_all_losses(audit_result):
    assert set(audit_result.per_loss) == {
        "reconstruction",
        "triplet",
        "contrastive",
        "cross_entropy",
    }


def test_audit_within_tolerance(audit_result):
    assert audit_result.max_relative_error < 1e-4


def test_audit_deterministic():
    torch.manual_seed(4)
    net = HaroodNet(SMALL_MODEL)
    a = finite_difference_audit(net, n_params=8, seed=21, image_size=32)
    b = finite_difference_audit(net, n_params=8, seed=21, image_size=32)
    assert a.per_loss == b.per_loss
