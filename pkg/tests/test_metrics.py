import time

import numpy as np
import pytest

from harood.metrics import (
    TimingResult,
    aupr,
    auroc,
    classification_report,
    fpr_at_tpr,
    measure_test_time,
)

from oracles import pairwise_auroc


def test_auroc_perfect_separation():
    assert auroc([0.1, 0.2], [0.8, 0.9]) == 1.0


def test_auroc_identical_multisets():
    scores = [0.3, 0.5, 0.7]
    assert auroc(scores, scores) == pytest.approx(0.5)


def test_auroc_hand_counted():
    # pairs: (0.2>0.1), (0.2<0.4), (0.3>0.1), (0.3<0.4) -> 2/4
    assert auroc([0.1, 0.4], [0.2, 0.3]) == pytest.approx(0.5)


@pytest.mark.parametrize("trial", range(100))
def test_auroc_matches_brute_force(trial):
    rng = np.random.default_rng(trial)
    n_id = int(rng.integers(1, 200))
    n_ood = int(rng.integers(1, 200))
    # Quantized scores force plenty of ties.
    id_scores = np.round(rng.normal(size=n_id), 1)
    ood_scores = np.round(rng.normal(0.5, 1.0, size=n_ood), 1)
    fast = auroc(id_scores, ood_scores)
    slow = pairwise_auroc(id_scores, ood_scores)
    assert fast == pytest.approx(slow, abs=1e-9)


def test_auroc_negation_duality():
    rng = np.random.default_rng(5)
    a = rng.normal(size=50)
    b = rng.normal(0.3, 1.0, size=70)
    assert auroc(a, b) + auroc(b, a) == pytest.approx(1.0, abs=1e-12)
    # Equivalent view: negating both scores swaps the roles exactly.
    assert auroc(a, b) == pytest.approx(auroc(-b, -a), abs=1e-12)


def test_auroc_monotone_transform_invariance():
    rng = np.random.default_rng(6)
    a = rng.normal(size=40)
    b = rng.normal(1.0, 2.0, size=40)
    base = auroc(a, b)
    assert auroc(np.exp(a), np.exp(b)) == pytest.approx(base, abs=1e-12)
    assert auroc(3 * a + 7, 3 * b + 7) == pytest.approx(base, abs=1e-12)


def test_auroc_rejects_empty():
    with pytest.raises(ValueError):
        auroc([], [1.0])


def test_aupr_perfect_and_all_positive():
    assert aupr([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0]) == pytest.approx(1.0)
    assert aupr([0.5, 0.1, 0.9], [1, 1, 1]) == pytest.approx(1.0)


def test_aupr_hand_swept_curve():
    # Thresholds sweep: P=1 at R=1/2, P=2/3 at R=1 -> 0.5 + 1/3
    value = aupr([0.9, 0.8, 0.7, 0.6], [1, 0, 1, 0])
    assert value == pytest.approx(0.5 + 1.0 / 3.0, abs=1e-12)


def test_aupr_requires_positives():
    with pytest.raises(ValueError):
        aupr([0.1, 0.2], [0, 0])


def test_fpr_at_tpr_perfect():
    assert fpr_at_tpr([0.0, 0.1], [0.9, 1.0]) == 0.0


def test_fpr_at_tpr_hand_counted():
    ood = np.arange(1, 101, dtype=float)
    ids = np.array([0.5, 5.5, 95.5, 200.0])
    # threshold = 6 keeps exactly 95 of 100 OOD; ID >= 6 are 95.5 and 200.
    assert fpr_at_tpr(ids, ood, 0.95) == pytest.approx(0.5)


def test_fpr_at_tpr_identical_distributions():
    scores = np.arange(1, 101, dtype=float)
    value = fpr_at_tpr(scores, scores, 0.95)
    assert abs(value - 0.95) <= 0.01 + 1e-12


def test_classification_report_all_correct():
    labels = np.repeat([0, 1, 2], 10)
    acc, conf = classification_report(labels, labels)
    assert np.all(acc == 1.0)
    assert np.array_equal(conf, np.diag([10, 10, 10]))


def test_classification_report_single_prediction():
    labels = np.repeat([0, 1, 2], 5)
    preds = np.full(15, 2)
    acc, conf = classification_report(preds, labels)
    assert acc[2] == 1.0 and acc[0] == 0.0 and acc[1] == 0.0
    assert conf[0, 2] == 5 and conf.sum() == 15


def test_classification_report_one_error_per_class():
    labels = np.repeat([0, 1, 2], 10)
    preds = labels.copy()
    preds[0] = 1
    preds[10] = 2
    preds[20] = 0
    acc, conf = classification_report(preds, labels)
    assert np.allclose(acc, 0.9)
    assert np.array_equal(conf.sum(axis=1), [10, 10, 10])


def test_measure_test_time_scales_with_n():
    def work(n):
        def run():
            t_end = time.perf_counter() + n * 2e-4
            while time.perf_counter() < t_end:
                pass

        return run

    t1 = measure_test_time(work(100), 100, repeats=3)
    t2 = measure_test_time(work(200), 200, repeats=3)
    assert isinstance(t1, TimingResult)
    assert len(t1.runs) == 3 and t1.std >= 0.0
    assert 1.5 <= t2.seconds / t1.seconds <= 2.5


def test_measure_test_time_empty_is_fast():
    t = measure_test_time(lambda: None, 0, repeats=2)
    assert t.seconds < 0.05
