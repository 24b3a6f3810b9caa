"""Model-agnostic Shapley attribution.

``explain`` is Kernel SHAP with an interventional value function: the value
of a coalition S for instance x is the mean model output over background
rows b with features in S taken from x and the rest from b.  Up to
``enum_threshold`` features every coalition is enumerated and the
Shapley-kernel weighted least squares problem (efficiency constraint
eliminated) returns the exact Shapley values.  Above it, paired coalition
samples are drawn with probability proportional to the Shapley kernel.

``exact_shapley_oracle`` computes the same quantity from the factorial
Shapley sum over subsets and shares no code with ``explain``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.special import expit

from .errors import DimensionMismatch, SolverSingular, TooManyFeatures
from .seeding import derive_seed

EXPLAINED_OUTPUT = "probability of class 1"


@dataclass(frozen=True)
class Background:
    rows: np.ndarray
    source: str = ""

    @property
    def B(self) -> int:
        return self.rows.shape[0]


@dataclass(frozen=True)
class ShapConfig:
    background_size: int = 64
    nsamples: int = 2048
    enum_threshold: int = 12
    seed: int = 0
    # "auto": structured coalition evaluation for tree ensembles; "generic": always materialise rows
    evaluator: str = "auto"
    chunk_rows: int = 400_000


@dataclass
class Attribution:
    values: np.ndarray
    base: float
    fx: np.ndarray
    mode: str = "enumerated"
    explained_output: str = EXPLAINED_OUTPUT


@dataclass
class GlobalImportance:
    per_feature: np.ndarray
    model_id: str = ""
    size: int = 0
    fold: int = -1

    def __post_init__(self):
        self.per_feature = np.asarray(self.per_feature, dtype=float)


def make_background(X, B: int, seed: int = 0, mean_row: bool = False, source: str = "train") -> Background:
    X = np.asarray(X, dtype=float)
    if len(X) == 0:
        raise ValueError("background source is empty")
    if mean_row:
        return Background(X.mean(axis=0, keepdims=True), f"{source}:mean")
    if B >= len(X):
        return Background(X.copy(), f"{source}:all")
    rng = np.random.default_rng(derive_seed(seed, "background", B))
    idx = np.sort(rng.choice(len(X), size=B, replace=False))
    return Background(X[idx], f"{source}:sample{B}")


# ---------------------------------------------------------------- coalitions

def all_masks(k: int) -> np.ndarray:
    """Boolean (2^k, k) matrix; row m has feature j present iff bit j of m is set."""
    m = np.arange(2 ** k, dtype=np.int64)
    return ((m[:, None] >> np.arange(k)) & 1).astype(bool)


def kernel_weight(k: int, size) -> np.ndarray:
    size = np.asarray(size)
    return (k - 1) / (np.array([math.comb(k, int(s)) for s in size.ravel()]).reshape(size.shape)
                      * size * (k - size))


def sample_masks(k: int, nsamples: int, seed: int) -> np.ndarray:
    """Paired coalition samples: a kernel-distributed mask followed by its complement."""
    rng = np.random.default_rng(seed)
    sizes = np.arange(1, k)
    p = (k - 1) / (sizes * (k - sizes))
    p = p / p.sum()
    out = np.zeros((nsamples, k), dtype=bool)
    for i in range(0, nsamples, 2):
        s = rng.choice(sizes, p=p)
        on = rng.choice(k, size=s, replace=False)
        out[i, on] = True
        if i + 1 < nsamples:
            out[i + 1] = ~out[i]
    return out


def _generic_values(f, X, bg, masks, chunk_rows):
    """V[i, m] = mean_b f(x_i on mask m, background b elsewhere)."""
    n, k = X.shape
    M, B = len(masks), len(bg)
    per_inst = M * B
    step = max(1, chunk_rows // per_inst)
    V = np.empty((n, M))
    for a in range(0, n, step):
        xs = X[a:a + step]
        H = np.where(masks[None, :, None, :], xs[:, None, None, :], bg[None, None, :, :])
        out = f(H.reshape(-1, k)).reshape(len(xs), M, B)
        V[a:a + step] = out.mean(axis=2)
    return V


@numba.njit(cache=True)
def _tree_table(X, bg, feature, threshold, left, right, value, roots, coef, init, logistic):
    """Enumerated coalition values of link(init + sum_t coef_t * tree_t(hybrid)).

    For one (instance, background row) pair a tree reaches a leaf for exactly
    the coalitions S with A <= S and S & B == 0, where A (B) are the features
    whose split sends the instance (background row) the leaf's way.  Leaf
    values are added at A | C with sign (-1)^|C| for every C <= B, and a
    subset-sum transform turns those into per-coalition outputs.
    """
    n, k = X.shape
    nb = bg.shape[0]
    M = 1 << k
    V = np.zeros((n, M))
    h = np.zeros(M)
    cap = 4 * (left.shape[0] + 1)
    s_node = np.empty(cap, np.int64)
    s_a = np.empty(cap, np.int64)
    s_b = np.empty(cap, np.int64)
    for i in range(n):
        for r in range(nb):
            h[:] = 0.0
            for t in range(roots.shape[0]):
                sp = 1
                s_node[0] = roots[t]
                s_a[0] = 0
                s_b[0] = 0
                while sp > 0:
                    sp -= 1
                    node = s_node[sp]
                    am = s_a[sp]
                    bm = s_b[sp]
                    if left[node] < 0:
                        v = coef[t] * value[node]
                        # all C subset of bm, Gray-free enumeration
                        c = bm
                        while True:
                            cnt = 0
                            cc = c
                            while cc:
                                cc &= cc - 1
                                cnt += 1
                            if cnt % 2 == 0:
                                h[am | c] += v
                            else:
                                h[am | c] -= v
                            if c == 0:
                                break
                            c = (c - 1) & bm
                        continue
                    f = feature[node]
                    thr = threshold[node]
                    xl = X[i, f] <= thr
                    rl = bg[r, f] <= thr
                    bit = 1 << f
                    cx = left[node] if xl else right[node]
                    cr = left[node] if rl else right[node]
                    if xl == rl:
                        s_node[sp] = cx
                        s_a[sp] = am
                        s_b[sp] = bm
                        sp += 1
                    elif am & bit:
                        s_node[sp] = cx
                        s_a[sp] = am
                        s_b[sp] = bm
                        sp += 1
                    elif bm & bit:
                        s_node[sp] = cr
                        s_a[sp] = am
                        s_b[sp] = bm
                        sp += 1
                    else:
                        s_node[sp] = cx
                        s_a[sp] = am | bit
                        s_b[sp] = bm
                        sp += 1
                        s_node[sp] = cr
                        s_a[sp] = am
                        s_b[sp] = bm | bit
                        sp += 1
            for j in range(k):
                bit = 1 << j
                for m in range(M):
                    if m & bit:
                        h[m] += h[m ^ bit]
            for m in range(M):
                z = init + h[m]
                if logistic:
                    z = 1.0 / (1.0 + np.exp(-z))
                else:
                    z = min(max(z, 0.0), 1.0)
                V[i, m] += z
    return V / nb


def _tree_parts(model):
    """(Forest, init, logistic) when ``model`` is a tree ensemble on raw features."""
    from .zoo.boosting import AdaBoost, GradientBoosting
    from .zoo.trees import DecisionTree, RandomForest

    est = getattr(model, "estimator", None)
    if est is None or getattr(model, "scaler", None) is not None:
        return None
    if isinstance(est, (DecisionTree, RandomForest)):
        return est.forest_, 0.0, False
    if isinstance(est, GradientBoosting):
        return est.forest_, est.init_, True
    if isinstance(est, AdaBoost):
        return est.forest_, 0.0, True
    return None


def coalition_values(model, X, bg, masks, config: ShapConfig, enumerated: bool):
    members = getattr(model, "members", None)
    if members is not None:
        return np.mean([coalition_values(m, X, bg, masks, config, enumerated) for m in members], axis=0)
    parts = _tree_parts(model) if (enumerated and config.evaluator == "auto") else None
    if parts is not None:
        forest, init, logistic = parts
        return _tree_table(np.ascontiguousarray(X), np.ascontiguousarray(bg), forest.feature, forest.threshold,
                           forest.left, forest.right, forest.value, forest.roots, forest.coef, float(init),
                           bool(logistic))
    return _generic_values(model.proba1, X, bg, masks, config.chunk_rows)


def _solve_kernel(Z, w, V, base, fx):
    """Weighted least squares with sum(phi) = fx - base eliminated via the last feature."""
    n, k = len(V), Z.shape[1]
    delta = fx - base
    if k == 1:
        return delta[:, None].copy()
    Zf = Z.astype(float)
    A = Zf[:, :-1] - Zf[:, [-1]]
    Y = V - base - np.outer(delta, Zf[:, -1])  # (n, M)
    AtW = A.T * w
    G = AtW @ A
    for ridge in (0.0, 1e-10):
        try:
            Gr = G + ridge * np.eye(k - 1)
            if np.linalg.cond(Gr) > 1e14:
                raise np.linalg.LinAlgError("ill-conditioned")
            P = np.linalg.solve(Gr, AtW)
            break
        except np.linalg.LinAlgError:
            continue
    else:
        raise SolverSingular("coalition design is singular even after ridge regularisation")
    head = Y @ P.T
    return np.column_stack([head, delta - head.sum(axis=1)])


def explain(model, X, bg: Background, config: ShapConfig | None = None) -> Attribution:
    """Shapley values of P(class 1) for every row of ``X``."""
    config = config or ShapConfig()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    k = X.shape[1]
    if k != model.feature_count or bg.rows.shape[1] != k:
        raise DimensionMismatch(f"model has {model.feature_count} features, X {k}, background {bg.rows.shape[1]}")
    if k <= config.enum_threshold:
        masks = all_masks(k)
        V = coalition_values(model, X, bg.rows, masks, config, enumerated=True)
        base = float(V[0, 0])
        fx = V[:, -1]
        interior = masks[1:-1]
        w = kernel_weight(k, interior.sum(axis=1))
        phi = _solve_kernel(interior, w, V[:, 1:-1], base, fx) if k > 1 else (fx - base)[:, None]
        mode = "enumerated"
    else:
        if config.nsamples < 2 * k + 4:
            raise ValueError(f"nsamples must be >= 2K+4 = {2 * k + 4}")
        masks = sample_masks(k, config.nsamples, derive_seed(config.seed, "coalitions", k))
        ends = np.vstack([np.zeros(k, bool), np.ones(k, bool)])
        V = coalition_values(model, X, bg.rows, np.vstack([ends, masks]), config, enumerated=False)
        base = float(V[0, 0])
        fx = V[:, 1]
        phi = _solve_kernel(masks, np.ones(len(masks)), V[:, 2:], base, fx)
        mode = "sampled"
    return Attribution(values=phi, base=base, fx=np.asarray(fx, dtype=float), mode=mode)


def exact_shapley_oracle(model, x, bg: Background, max_features: int = 12) -> np.ndarray:
    """Factorial-weighted Shapley sum with the interventional value function."""
    x = np.asarray(x, dtype=float).ravel()
    k = len(x)
    if k > max_features:
        raise TooManyFeatures(f"{k} features exceeds oracle limit {max_features}")
    rows = np.asarray(bg.rows, dtype=float)
    cache = {}

    def v(subset):
        key = frozenset(subset)
        if key not in cache:
            hybrid = rows.copy()
            cols = sorted(key)
            if cols:
                hybrid[:, cols] = x[cols]
            cache[key] = float(np.mean(model.proba1(hybrid)))
        return cache[key]

    fk = math.factorial(k)
    phi = np.zeros(k)
    for j in range(k):
        others = [i for i in range(k) if i != j]
        for r in range(k):
            weight = math.factorial(r) * math.factorial(k - r - 1) / fk
            for S in itertools.combinations(others, r):
                phi[j] += weight * (v(S + (j,)) - v(S))
    return phi


def aggregate(a: Attribution, model_id="", size=0, fold=-1) -> GlobalImportance:
    if len(a.values) < 1:
        raise ValueError("attribution has no instances")
    return GlobalImportance(np.abs(a.values).mean(axis=0), model_id, size, fold)
