"""Classifier families, training, bagging and random hyperparameter search.

Every family is implemented in this package.  Scale-sensitive families are
fitted on z-scored features (statistics from the training rows only); the
scaler is part of the trained model, so callers always pass raw features.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import (
    DimensionMismatch,
    MemberMismatch,
    NonConvergenceWarning,
    SingularCovarianceWarning,
    UnknownFamily,
)
from ..metrics import confusion, kappa
from ..parallel import pmap
from ..seeding import derive_seed
from .boosting import AdaBoost, GradientBoosting
from .gaussian import LDA, QDA, GaussianNB
from .linear import LinearSVM, LogisticRegression, RidgeClassifier
from .neighbors import KNN
from .trees import DecisionTree, RandomForest

FAMILIES = ("lr", "ridge", "lda", "qda", "nb", "dt", "rf", "et", "ada", "gbc", "knn", "svm")
SCALED = frozenset({"lr", "ridge", "svm", "knn", "lda", "qda", "nb"})

# (kind, low, high) or ("choice", values); defaults used when a key is omitted
SEARCH_SPACES = {
    "lr": {"l2": ("loguniform", 1e-4, 1e2)},
    "ridge": {"l2": ("loguniform", 1e-4, 1e2)},
    "svm": {"l2": ("loguniform", 1e-4, 1e2)},
    "lda": {"shrinkage": ("uniform", 0.0, 0.5)},
    "qda": {"shrinkage": ("uniform", 0.0, 0.5)},
    "nb": {"var_smoothing": ("loguniform", 1e-10, 1e-6)},
    "dt": {"max_depth": ("int", 2, 16), "min_leaf": ("choice", (1, 2, 4, 8))},
    "rf": {"max_depth": ("int", 2, 16), "min_leaf": ("choice", (1, 2, 4, 8)), "n_trees": ("int", 50, 300)},
    "et": {"max_depth": ("int", 2, 16), "min_leaf": ("choice", (1, 2, 4, 8)), "n_trees": ("int", 50, 300)},
    "ada": {"n_estimators": ("int", 50, 300), "learning_rate": ("loguniform", 0.01, 1.0)},
    "gbc": {"n_estimators": ("int", 50, 300), "learning_rate": ("loguniform", 0.01, 1.0)},
    "knn": {"k": ("choice", tuple(range(1, 32, 2)))},
}

DEFAULTS = {
    "lr": {"l2": 1.0},
    "ridge": {"l2": 1.0},
    "svm": {"l2": 1.0},
    "lda": {"shrinkage": 0.0},
    "qda": {"shrinkage": 0.0},
    "nb": {"var_smoothing": 1e-9},
    "dt": {"max_depth": None, "min_leaf": 1},
    "rf": {"max_depth": None, "min_leaf": 1, "n_trees": 100, "max_features": "sqrt", "bootstrap": True},
    "et": {"max_depth": None, "min_leaf": 1, "n_trees": 100, "max_features": "sqrt", "bootstrap": False},
    "ada": {"n_estimators": 50, "learning_rate": 1.0},
    "gbc": {"n_estimators": 100, "learning_rate": 0.1, "max_depth": 3, "min_leaf": 1},
    "knn": {"k": 5},
}


@dataclass(frozen=True)
class ModelSpec:
    family: str
    hyperparams: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UnknownFamily(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        unknown = set(self.hyperparams) - set(DEFAULTS[self.family])
        if unknown:
            raise ValueError(f"{self.family}: unknown hyperparameters {sorted(unknown)}")
        merged = dict(DEFAULTS[self.family])
        merged.update(self.hyperparams)
        object.__setattr__(self, "hyperparams", dict(sorted(merged.items())))

    def to_dict(self):
        return {"family": self.family, "hyperparams": dict(self.hyperparams), "seed": int(self.seed)}

    @classmethod
    def from_dict(cls, d):
        return cls(d["family"], dict(d.get("hyperparams", {})), int(d.get("seed", 0)))


def _build(spec: ModelSpec):
    hp = spec.hyperparams
    s = spec.seed % (2**31 - 1)
    f = spec.family
    if f == "lr":
        return LogisticRegression(l2=hp["l2"])
    if f == "ridge":
        return RidgeClassifier(l2=hp["l2"])
    if f == "svm":
        return LinearSVM(l2=hp["l2"])
    if f == "lda":
        return LDA(shrinkage=hp["shrinkage"])
    if f == "qda":
        return QDA(shrinkage=hp["shrinkage"])
    if f == "nb":
        return GaussianNB(var_smoothing=hp["var_smoothing"])
    if f == "dt":
        return DecisionTree(max_depth=hp["max_depth"], min_leaf=hp["min_leaf"], seed=s)
    if f in ("rf", "et"):
        return RandomForest(n_trees=int(hp["n_trees"]), max_depth=hp["max_depth"], min_leaf=hp["min_leaf"],
                            max_features=hp["max_features"], bootstrap=hp["bootstrap"], extra=(f == "et"), seed=s)
    if f == "ada":
        return AdaBoost(n_estimators=int(hp["n_estimators"]), learning_rate=hp["learning_rate"], seed=s)
    if f == "gbc":
        return GradientBoosting(n_estimators=int(hp["n_estimators"]), learning_rate=hp["learning_rate"],
                                max_depth=hp["max_depth"], min_leaf=hp["min_leaf"], seed=s)
    if f == "knn":
        return KNN(k=int(hp["k"]))
    raise UnknownFamily(f)


class _Classifier:
    """Shared probability interface of single models and bagging ensembles."""

    feature_count: int

    def proba1(self, X) -> np.ndarray:
        raise NotImplementedError

    def _check(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.feature_count:
            raise DimensionMismatch(f"model expects {self.feature_count} features, got {X.shape[1]}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        p1 = self.proba1(X)
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X) -> np.ndarray:
        return (self.proba1(X) > 0.5).astype(np.int64)

    __call__ = proba1


class TrainedModel(_Classifier):
    def __init__(self, spec, estimator, feature_count, class_prior, scaler=None, status="ok", notes=()):
        self.spec = spec
        self.estimator = estimator
        self.feature_count = feature_count
        self.class_prior = class_prior
        self.scaler = scaler
        self.status = status
        self.notes = tuple(notes)

    @property
    def id(self):
        return self.spec.family

    def proba1(self, X):
        X = self._check(X)
        if self.scaler is not None:
            X = (X - self.scaler[0]) / self.scaler[1]
        return np.clip(self.estimator.proba1(X), 0.0, 1.0)

    __call__ = proba1


class BaggingEnsemble(_Classifier):
    """Mean-probability combination of already trained members."""

    def __init__(self, members):
        self.members = tuple(members)
        self.feature_count = self.members[0].feature_count
        statuses = sorted({m.status for m in self.members} - {"ok"})
        self.status = statuses[0] if statuses else "ok"
        self.class_prior = self.members[0].class_prior

    @property
    def id(self):
        return "bagging"

    def proba1(self, X):
        X = self._check(X)
        return np.mean([m.proba1(X) for m in self.members], axis=0)

    __call__ = proba1


def train(spec: ModelSpec, X, y) -> TrainedModel:
    """Fit ``spec`` on (X, y).  Singular covariances are repaired, non-convergence is reported."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(np.int64)
    if X.ndim != 2 or len(X) != len(y):
        raise DimensionMismatch(f"X {X.shape} vs y {y.shape}")
    if not np.isfinite(X).all():
        raise ValueError("training features must be finite")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    scaler = None
    Xf = X
    if spec.family in SCALED:
        mu = X.mean(axis=0)
        sd = X.std(axis=0)
        sd = np.where(sd < 1e-12, 1.0, sd)
        scaler = (mu, sd)
        Xf = (X - mu) / sd
    est = _build(spec)
    if spec.family in ("lda", "qda", "nb") and len(np.unique(y)) < 2:
        raise ValueError(f"{spec.family} needs both classes in the training data")
    est.fit(Xf, y)
    status, notes = "ok", []
    if getattr(est, "repaired_", False):
        status = "repaired-shrinkage"
        notes.append("singular covariance repaired with ridge shrinkage")
        warnings.warn(f"{spec.family}: singular covariance repaired by ridge shrinkage",
                      SingularCovarianceWarning, stacklevel=2)
    if getattr(est, "converged_", True) is False:
        status = "nonconverged" if status == "ok" else status
        notes.append("optimizer stopped before tolerance")
        warnings.warn(f"{spec.family}: optimizer did not reach tolerance", NonConvergenceWarning, stacklevel=2)
    return TrainedModel(spec, est, X.shape[1], float(y.mean()), scaler, status, notes)


def predict_proba(m, X) -> np.ndarray:
    return m.predict_proba(X)


def bag(members) -> BaggingEnsemble:
    members = list(members)
    if len(members) < 2:
        raise MemberMismatch("bagging needs at least two members")
    if len({m.feature_count for m in members}) != 1:
        raise MemberMismatch("members disagree on feature count")
    return BaggingEnsemble(members)


# ---------------------------------------------------------------- search

def sample_hyperparams(family, rng: np.random.Generator) -> dict:
    out = {}
    for name, dist in SEARCH_SPACES[family].items():
        kind = dist[0]
        if kind == "loguniform":
            out[name] = float(math.exp(rng.uniform(math.log(dist[1]), math.log(dist[2]))))
        elif kind == "uniform":
            out[name] = float(rng.uniform(dist[1], dist[2]))
        elif kind == "int":
            out[name] = int(rng.integers(dist[1], dist[2] + 1))
        elif kind == "choice":
            out[name] = dist[1][int(rng.integers(len(dist[1])))]
        else:
            raise ValueError(kind)
    return out


def candidate_specs(family, budget, seed):
    """The ``budget`` configurations random search evaluates, in draw order."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = np.random.default_rng(derive_seed(seed, "search", family))
    return [ModelSpec(family, sample_hyperparams(family, rng), derive_seed(seed, "model", family, i))
            for i in range(budget)]


def cv_kappas(spec, X, y, folds) -> np.ndarray:
    """Per-fold Cohen's kappa of ``spec``; a failed fit scores -inf."""
    out = np.empty(folds.k)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for f in range(folds.k):
            tr = folds.assignments != f
            try:
                m = train(spec, X[tr], y[tr])
                out[f] = kappa(confusion(y[~tr], m.predict(X[~tr])))
            except (ValueError, np.linalg.LinAlgError, ArithmeticError):
                out[f] = -np.inf
    return out


def _cv_job(args):
    spec, X, y, folds = args
    return cv_kappas(spec, X, y, folds)


def search_table(family, X, y, budget, folds, seed, workers=1):
    """All sampled specs with their per-fold kappas."""
    specs = candidate_specs(family, budget, seed)
    scores = pmap(_cv_job, [(s, X, y, folds) for s in specs], workers)
    return list(zip(specs, scores))


def best_of(table):
    """Index of the highest mean kappa, earliest draw on ties."""
    means = [float(np.mean(s)) if np.all(np.isfinite(s)) else -np.inf for _, s in table]
    best = 0
    for i, m in enumerate(means):
        if m > means[best]:
            best = i
    return best


def random_search(family, X, y, budget, folds, seed, workers=1) -> ModelSpec:
    table = search_table(family, X, y, budget, folds, seed, workers)
    return table[best_of(table)][0]
