import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rashomon_audit.data import make_folds
from rashomon_audit.errors import DimensionMismatch, MemberMismatch, SingularCovarianceWarning, UnknownFamily
from rashomon_audit.metrics import confusion, kappa, mcc
from rashomon_audit.zoo import (
    FAMILIES, ModelSpec, bag, best_of, candidate_specs, cv_kappas, predict_proba, random_search, search_table,
    train,
)
from rashomon_audit.zoo.linear import logistic_objective
from rashomon_audit.zoo.trees import DecisionTree, RandomForest

from conftest import tiny_dataset


class _Const:
    """Stub member returning a fixed class-1 probability."""

    def __init__(self, p, k=2):
        self.p, self.feature_count, self.status, self.class_prior = p, k, "ok", 0.5

    def proba1(self, X):
        return np.full(len(X), self.p)


@pytest.fixture(scope="module")
def data():
    d = tiny_dataset(n=120, k=4, seed=2)
    return d.features, d.labels


@pytest.mark.parametrize("family", FAMILIES)
def test_every_family_trains_and_outputs_probabilities(family, data):
    X, y = data
    m = train(ModelSpec(family, {}, seed=3), X, y)
    P = predict_proba(m, X)
    assert P.shape == (len(X), 2)
    assert np.all((P >= 0) & (P <= 1))
    np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-9)
    again = train(ModelSpec(family, {}, seed=3), X, y)
    assert np.array_equal(m.proba1(X), again.proba1(X))
    with pytest.raises(DimensionMismatch):
        m.proba1(X[:, :2])


@pytest.mark.parametrize("family", FAMILIES)
def test_beats_chance(family, data):
    X, y = data
    m = train(ModelSpec(family, {}, seed=1), X, y)
    assert kappa(confusion(y, m.predict(X))) > 0.3


def test_lr_separable_two_points():
    m = train(ModelSpec("lr", {"l2": 1e-4}), np.array([[0.0], [1.0]]), np.array([0, 1]))
    assert m.predict(np.array([[0.0], [1.0]])).tolist() == [0, 1]


def test_stump_depth_zero_is_prior(data):
    X, y = data
    m = DecisionTree(max_depth=0).fit(X, y)
    np.testing.assert_allclose(m.proba1(X), y.mean())


def test_forest_of_one_equals_tree(data):
    X, y = data
    t = DecisionTree(max_depth=None, seed=9).fit(X, y)
    f = RandomForest(n_trees=1, max_features=None, bootstrap=False, seed=9).fit(X, y)
    np.testing.assert_array_equal(t.proba1(X), f.proba1(X))
    # extremely randomized trees reduce to a randomized-threshold tree with the same stream
    seed = int(np.random.default_rng(9).integers(0, 2**31 - 1))
    e = RandomForest(n_trees=1, max_features=None, bootstrap=False, extra=True, seed=9).fit(X, y)
    rt = DecisionTree(random_split=True, seed=seed).fit(X, y)
    np.testing.assert_array_equal(e.proba1(X), rt.proba1(X))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), l2=st.floats(1e-3, 10))
def test_logistic_gradient_matches_finite_differences(seed, l2):
    r = np.random.default_rng(seed)
    X = r.normal(size=(15, 3))
    y = (r.random(15) < 0.5).astype(float)
    theta = r.normal(size=4)
    _, g = logistic_objective(theta, X, y, l2)
    h = 1e-6
    num = np.array([(logistic_objective(theta + h * e, X, y, l2)[0] - logistic_objective(theta - h * e, X, y, l2)[0])
                    / (2 * h) for e in np.eye(4)])
    np.testing.assert_allclose(g, num, rtol=1e-5, atol=1e-7)


def test_qda_singular_repair():
    r = np.random.default_rng(0)
    X = r.normal(size=(16, 3))
    X[:, 2] = X[:, 0] + X[:, 1]  # rank deficient
    y = np.array([0, 1] * 8)
    with pytest.warns(SingularCovarianceWarning):
        m = train(ModelSpec("qda", {"shrinkage": 0.0}), X, y)
    assert m.status == "repaired-shrinkage"
    assert np.all(np.isfinite(m.proba1(X)))


def test_bag_examples(data):
    X, _ = data
    two = bag([_Const(0.2), _Const(0.6)])
    np.testing.assert_allclose(two.proba1(np.zeros((3, 2))), 0.4)
    three = bag([_Const(0.1), _Const(0.5), _Const(0.9)])
    np.testing.assert_allclose(three.proba1(np.zeros((1, 2))), 0.5)
    with pytest.raises(MemberMismatch):
        bag([_Const(0.1)])
    with pytest.raises(MemberMismatch):
        bag([_Const(0.1, 2), _Const(0.1, 3)])


def test_bag_identical_members(data):
    X, y = data
    m = train(ModelSpec("lr"), X, y)
    np.testing.assert_array_equal(bag([m, m]).predict(X), m.predict(X))


def test_bagging_mcc_rarely_below_worst_member():
    """Statistical check over 50 seeded replicates: ensemble MCC >= min member MCC in >= 80%."""
    wins = 0
    for rep in range(50):
        d = tiny_dataset(n=300, k=5, seed=1000 + rep)
        X, y = d.features, d.labels
        tr, te = np.arange(200), np.arange(200, 300)
        ms = [train(ModelSpec(f, {}, seed=rep), X[tr], y[tr]) for f in ("lr", "dt", "nb")]
        member = [mcc(confusion(y[te], m.predict(X[te]))) for m in ms]
        ens = mcc(confusion(y[te], bag(ms).predict(X[te])))
        wins += ens >= min(member)
    assert wins >= 40


def test_knn_one_neighbour_recovers_label(data):
    X, y = data
    m = train(ModelSpec("knn", {"k": 1}), X, y)
    np.testing.assert_array_equal(m.proba1(X), y)


def test_unknown_family_and_hyperparams():
    with pytest.raises(UnknownFamily):
        ModelSpec("xgb")
    with pytest.raises(ValueError):
        ModelSpec("lr", {"depth": 3})


def test_search_budget_one_and_determinism(data):
    X, y = data
    folds = make_folds(y, 5, 0)
    only = candidate_specs("rf", 1, 4)[0]
    assert random_search("rf", X, y, 1, folds, 4) == only
    assert random_search("lr", X, y, 5, folds, 4) == random_search("lr", X, y, 5, folds, 4)


def test_search_argmax_matches_exhaustive_table():
    r = np.random.default_rng(7)
    X = r.normal(size=(300, 5))
    y = ((X[:, 0] > 0) ^ (r.random(300) < 0.25)).astype(int)
    folds = make_folds(y, 5, 1)
    table = search_table("dt", X, y, 20, folds, 11)
    means = [np.mean(cv_kappas(s, X, y, folds)) for s, _ in table]
    chosen = random_search("dt", X, y, 20, folds, 11)
    assert chosen == table[int(np.argmax(means))][0]
    assert table[best_of(table)][0].hyperparams["max_depth"] < 16
