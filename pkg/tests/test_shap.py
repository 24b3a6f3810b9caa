import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rashomon_audit.errors import DimensionMismatch, TooManyFeatures
from rashomon_audit.shap import (
    Attribution, Background, ShapConfig, aggregate, all_masks, exact_shapley_oracle, explain, kernel_weight,
    make_background, sample_masks,
)
from rashomon_audit.zoo import FAMILIES, ModelSpec, bag, train

from conftest import tiny_dataset


class Fn:
    """Wrap a plain function as an explainable model."""

    def __init__(self, f, k):
        self.f, self.feature_count = f, k

    def proba1(self, X):
        return self.f(np.asarray(X, float))


@pytest.fixture(scope="module")
def six():
    d = tiny_dataset(n=150, k=6, seed=8)
    return d.features, d.labels


def test_background_examples(six):
    X, _ = six
    assert make_background(X[:10], 64).B == 10
    a, b = make_background(X, 16, seed=3), make_background(X, 16, seed=3)
    assert np.array_equal(a.rows, b.rows)
    m = make_background(X, 1, mean_row=True)
    np.testing.assert_allclose(m.rows[0], X.mean(axis=0))


def test_masks_and_weights():
    M = all_masks(4)
    assert M.shape == (16, 4) and len({tuple(r) for r in M}) == 16
    w = kernel_weight(4, np.array([1, 2, 3]))
    np.testing.assert_allclose(w, [3 / (4 * 1 * 3), 3 / (6 * 2 * 2), 3 / (4 * 3 * 1)])
    S = sample_masks(20, 64, seed=1)
    np.testing.assert_array_equal(S[0::2], ~S[1::2])  # paired complements
    assert np.all((S.sum(axis=1) > 0) & (S.sum(axis=1) < 20))


@pytest.mark.parametrize("family", ["lr", "dt", "gbc", "rf", "ada", "nb", "svm", "knn"])
def test_explain_matches_oracle(family, six):
    X, y = six
    m = train(ModelSpec(family, {}, seed=2), X, y)
    bg = make_background(X, 12, seed=1)
    att = explain(m, X[:4], bg)
    for i in range(4):
        np.testing.assert_allclose(att.values[i], exact_shapley_oracle(m, X[i], bg), atol=1e-9)
    np.testing.assert_allclose(att.values.sum(axis=1), att.fx - att.base, atol=1e-9)


def test_tree_evaluator_equals_generic(six):
    X, y = six
    bg = make_background(X, 10, seed=4)
    for fam in ("dt", "rf", "et", "gbc", "ada"):
        m = train(ModelSpec(fam, {}, seed=5), X, y)
        a = explain(m, X[:8], bg, ShapConfig(evaluator="auto"))
        b = explain(m, X[:8], bg, ShapConfig(evaluator="generic"))
        np.testing.assert_allclose(a.values, b.values, atol=1e-10)


def test_bagging_oracle(six):
    X, y = six
    ms = [train(ModelSpec(f, {}, seed=1), X, y) for f in ("lr", "dt", "gbc")]
    e = bag(ms)
    bg = make_background(X, 8, seed=2)
    att = explain(e, X[:3], bg)
    for i in range(3):
        np.testing.assert_allclose(att.values[i], exact_shapley_oracle(e, X[i], bg), atol=1e-9)
    mean_of_members = np.mean([explain(m, X[:3], bg).values for m in ms], axis=0)
    np.testing.assert_allclose(att.values, mean_of_members, atol=1e-12)


def test_linear_closed_form():
    r = np.random.default_rng(0)
    w = r.normal(size=5)
    model = Fn(lambda X: X @ w, 5)
    X = r.normal(size=(30, 5))
    bg = make_background(X, 1, mean_row=True)
    att = explain(model, X[:6], bg)
    np.testing.assert_allclose(att.values, w * (X[:6] - X.mean(axis=0)), atol=1e-10)


def test_dummy_feature(six):
    X, y = six
    m = train(ModelSpec("dt", {"max_depth": 2}, seed=0), X, y)
    unused = sorted(set(range(6)) - set(m.estimator.used_features()))
    assert unused
    att = explain(m, X[:10], make_background(X, 16))
    assert np.abs(att.values[:, unused]).max() <= 1e-9


def test_symmetry_and_constant():
    r = np.random.default_rng(1)
    base = r.normal(size=(20, 1))
    bg = Background(np.hstack([base, base, r.normal(size=(20, 1))]))  # features 0 and 1 exchangeable
    model = Fn(lambda X: X[:, 0] + X[:, 1], 3)
    x = np.array([0.7, 0.7, -2.0])
    phi = exact_shapley_oracle(model, x, bg)
    assert phi[0] == pytest.approx(phi[1], abs=1e-12)
    att = explain(model, x[None], bg)
    assert att.values[0, 0] == pytest.approx(att.values[0, 1], abs=1e-9)
    const = Fn(lambda X: np.full(len(X), 0.3), 3)
    np.testing.assert_allclose(explain(const, x[None], bg).values, 0.0, atol=1e-12)


def test_sampled_mode_local_accuracy_and_convergence():
    r = np.random.default_rng(3)
    k = 14
    w = r.normal(size=k)
    model = Fn(lambda X: 1 / (1 + np.exp(-(X @ w) / 3)), k)
    X = r.normal(size=(40, k))
    bg = make_background(X, 8, seed=0)
    exact = explain(model, X[:3], bg, ShapConfig(enum_threshold=14)).values
    devs = {n: [] for n in (512, 1024, 2048)}
    for seed in range(20):
        for n in devs:
            a = explain(model, X[:3], bg, ShapConfig(nsamples=n, seed=seed, enum_threshold=12))
            assert a.mode == "sampled"
            np.testing.assert_allclose(a.values.sum(axis=1), a.fx - a.base, atol=1e-3)
            devs[n].append(np.abs(a.values - exact).max())
    med = [np.median(devs[n]) for n in (512, 1024, 2048)]
    assert med[0] >= med[1] >= med[2]


def test_errors(six):
    X, y = six
    m = train(ModelSpec("lr"), X, y)
    with pytest.raises(DimensionMismatch):
        explain(m, X[:2, :5], make_background(X, 4))
    with pytest.raises(TooManyFeatures):
        exact_shapley_oracle(Fn(lambda X: X[:, 0], 13), np.zeros(13), Background(np.zeros((2, 13))))


def test_aggregate_examples():
    a = Attribution(np.array([[0.2, -1.0], [-0.4, 0.0]]), 0.0, np.zeros(2))
    np.testing.assert_allclose(aggregate(a).per_feature, [0.3, 0.5])
    one = Attribution(np.array([[-0.2, 0.1]]), 0.0, np.zeros(1))
    np.testing.assert_allclose(aggregate(one).per_feature, [0.2, 0.1])
    zero = Attribution(np.zeros((3, 2)), 0.0, np.zeros(3))
    np.testing.assert_array_equal(aggregate(zero).per_feature, 0.0)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(1, 7))
def test_efficiency_random_models(seed, k):
    r = np.random.default_rng(seed)
    W = r.normal(size=(k, k))
    model = Fn(lambda X: np.tanh(X @ W).sum(axis=1) ** 2, k)
    X = r.normal(size=(5, k))
    att = explain(model, X, Background(r.normal(size=(4, k))))
    np.testing.assert_allclose(att.values.sum(axis=1), att.fx - att.base, atol=1e-8)
