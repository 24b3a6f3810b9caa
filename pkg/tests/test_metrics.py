import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rashomon_audit.metrics import ConfusionCounts, LengthMismatch, confusion, f1, kappa, mcc, score, score_labels


def test_confusion_examples(rng):
    assert confusion([1, 0], [1, 0]) == ConfusionCounts(1, 0, 0, 1)
    assert confusion([1, 1], [0, 0]).fn == 2
    c = confusion(rng.integers(0, 2, 100), rng.integers(0, 2, 100))
    assert c.total == 100
    with pytest.raises(LengthMismatch):
        confusion([1, 0], [1])


def test_hand_computed():
    c = ConfusionCounts(tp=40, fp=20, fn=10, tn=30)
    assert kappa(c) == pytest.approx(0.4)
    r = score(c)
    assert r.acc == pytest.approx(0.7)
    assert r.f1 == pytest.approx(80 / 110)
    assert r.mcc == pytest.approx(0.4082, abs=1e-4)


def test_perfect_and_degenerate():
    r = score_labels([0, 1, 1, 0], [0, 1, 1, 0])
    assert (r.acc, r.f1, r.mcc, r.kappa) == (1.0, 1.0, 1.0, 1.0)
    r = score_labels([1] * 10 + [0] * 90, [0] * 100)
    assert r.acc == pytest.approx(0.9)
    assert (r.f1, r.mcc, r.kappa) == (0.0, 0.0, 0.0)


def test_kappa_zero_under_independence():
    r = np.random.default_rng(0)
    ks = []
    for _ in range(10_000):
        t = r.random(50) < 0.4
        p = r.random(50) < 0.4
        ks.append(kappa(confusion(t, p)))
    assert abs(np.mean(ks)) < 0.02


def test_exhaustive_small_tables_finite_and_symmetric():
    for tp, fp, fn, tn in itertools.product(range(13), repeat=4):
        if tp + fp + fn + tn == 0 or tp + fp + fn + tn > 50:
            continue
        c = ConfusionCounts(tp, fp, fn, tn)
        r = score(c)
        assert all(np.isfinite(v) for v in r.as_dict().values())
        swapped = score(ConfusionCounts(tn, fn, fp, tp))
        assert swapped.acc == pytest.approx(r.acc)
        assert swapped.mcc == pytest.approx(r.mcc)
        assert swapped.kappa == pytest.approx(r.kappa)
        if fp == fn:
            assert r.kappa == pytest.approx(r.mcc, abs=1e-12)


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=200))
def test_bounds(pairs):
    t, p = zip(*pairs)
    r = score_labels(t, p)
    assert 0 <= r.acc <= 1 and 0 <= r.f1 <= 1
    assert -1 - 1e-12 <= r.mcc <= 1 + 1e-12
    assert -1 - 1e-12 <= r.kappa <= 1 + 1e-12
