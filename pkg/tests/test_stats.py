import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rashomon_audit.errors import ConstantInput, DegenerateR, OutOfRange, TooShort
from rashomon_audit.stats import bh_fdr, correlation_table, midranks, posthoc_power, spearman


def test_spearman_examples():
    assert spearman([1, 2, 3, 4, 5], [2, 3, 5, 7, 11])[0] == pytest.approx(1.0)
    assert spearman([1, 2, 3, 4, 5], [5, 4, 3, 2, 1])[0] == pytest.approx(-1.0)
    # one-step swaps at two places: d^2 sum = 4, rho = 1 - 6*4/(5*24) = 0.8
    assert spearman([1, 2, 3, 4, 5], [2, 1, 4, 3, 5])[0] == pytest.approx(0.8)
    with pytest.raises(TooShort):
        spearman([1, 2, 3], [1, 2, 3])
    with pytest.raises(ConstantInput):
        spearman([1, 1, 1, 1], [1, 2, 3, 4])


def test_midranks_ties():
    np.testing.assert_allclose(midranks([10, 20, 20, 30]), [1, 2.5, 2.5, 4])


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(5, 8))
def test_t_approximation_close_to_exact(seed, n):
    r = np.random.default_rng(seed)
    x = np.arange(n, dtype=float)
    y = x + r.normal(scale=2.0, size=n)
    _, p_t = spearman(x, y)
    _, p_e = spearman(x, y, method="exact")
    # the t approximation is coarse at n <= 8; checked loosely here, pinned in the acceptance suite
    assert abs(p_t - p_e) < 0.1


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-1000, 1000), min_size=5, max_size=30, unique=True),
       st.lists(st.integers(-1000, 1000), min_size=5, max_size=30, unique=True))
def test_monotone_invariance(x, y):
    n = min(len(x), len(y))
    x, y = np.array(x[:n], float), np.array(y[:n], float)
    r1, p1 = spearman(x, y)
    r2, p2 = spearman(np.exp(x / 500), y ** 3)
    assert r1 == pytest.approx(r2, abs=1e-12) and p1 == pytest.approx(p2, abs=1e-12)


def test_bh_examples():
    assert bh_fdr([0.03]).tolist() == [0.03]
    assert bh_fdr([0.01, 0.02, 0.03, 0.04]).tolist() == [0.04, 0.04, 0.04, 0.04]
    assert bh_fdr([1.0, 1.0, 1.0]).tolist() == [1.0, 1.0, 1.0]
    with pytest.raises(OutOfRange):
        bh_fdr([0.5, 1.2])


def test_bh_hand_case_step_up():
    # sorted p * m / rank = [0.04, 0.06, 0.04]; step-up minimum from the top gives [0.04, 0.04, 0.04]
    np.testing.assert_allclose(bh_fdr([0.04, 0.01, 0.03]), [0.04, 0.03, 0.04])


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=20), st.data())
def test_bh_properties(p, data):
    p = np.array(p)
    q = bh_fdr(p)
    assert np.all(q >= p) and np.all(q <= 1)
    perm = np.array(data.draw(st.permutations(range(len(p)))))
    np.testing.assert_array_equal(bh_fdr(p[perm]), q[perm])
    # ordering of p is preserved
    order = np.argsort(p, kind="stable")
    assert np.all(np.diff(q[order]) >= -1e-15)


def test_power_examples():
    assert posthoc_power(0.0, 24) == pytest.approx(0.05 / 2, abs=1e-12)
    assert posthoc_power(0.999999, 24) > 0.999
    assert posthoc_power(0.889, 24) >= 0.99
    with pytest.raises(DegenerateR):
        posthoc_power(1.0, 24)
    with pytest.raises(TooShort):
        posthoc_power(0.5, 3)


@given(st.floats(0, 0.99), st.floats(0, 0.99), st.integers(4, 200), st.integers(4, 200))
def test_power_monotone(r1, r2, n1, n2):
    (r1, r2), (n1, n2) = sorted((r1, r2)), sorted((n1, n2))
    assert posthoc_power(r1, n1) <= posthoc_power(r2, n1) + 1e-12
    assert posthoc_power(r1, n1) <= posthoc_power(r1, n2) + 1e-12


def test_correlation_table():
    x = list(range(10))
    rows, notes = correlation_table({"up": (x, [v ** 2 for v in x]), "flat": (x, [1] * 10),
                                     "noise": (x, [3, 1, 4, 1, 5, 9, 2, 6, 5, 3])})
    assert [r.label for r in rows] == ["up", "noise"]
    assert notes and "flat" in notes[0]
    assert rows[0].r == 1.0 and rows[0].power == 1.0
    np.testing.assert_allclose([r.p_cor for r in rows], bh_fdr([r.p for r in rows]))
