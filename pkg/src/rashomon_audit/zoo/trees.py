"""CART trees on binned features, compiled with numba.

A single builder grows weighted least-squares regression trees.  For a 0/1
target the weighted variance is half the Gini impurity, so the same builder
serves classification trees (leaf value = class-1 frequency), boosting
stumps and gradient-boosting regression trees.

Features are binned once per fit: every distinct training value gets its own
bin when there are at most ``max_bins`` of them (exact CART), otherwise
quantile cuts are used.  Split thresholds are stored as real cut points so
prediction runs on raw inputs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

MAX_BINS = 255
UNBOUNDED = 1 << 20


def make_bins(X: np.ndarray, max_bins: int = MAX_BINS):
    """Return (codes uint8 matrix, list of per-feature cut arrays)."""
    n, k = X.shape
    codes = np.empty((n, k), dtype=np.uint8)
    cuts = []
    for j in range(k):
        col = X[:, j]
        u = np.unique(col)
        if len(u) <= max_bins:
            c = (u[:-1] + u[1:]) / 2.0
        else:
            q = np.quantile(col, np.linspace(0, 1, max_bins + 1)[1:-1])
            c = np.unique(q)
        # code = number of cuts strictly below x, so code <= b  <=>  x <= c[b]
        codes[:, j] = np.searchsorted(c, col, side="left")
        cuts.append(c.astype(np.float64))
    return codes, cuts


@numba.njit(cache=True)
def _build(codes, nbins, target, weight, rows, max_depth, min_leaf, max_features,
           random_split, seed):
    np.random.seed(seed)
    n_rows = rows.shape[0]
    k = codes.shape[1]
    cap = 2 * n_rows + 1
    feature = np.full(cap, -1, np.int64)
    thr_bin = np.zeros(cap, np.int64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros(cap, np.float64)
    node_w = np.zeros(cap, np.float64)

    idx = rows.copy()
    # stack of (node, start, end, depth)
    st_node = np.empty(cap, np.int64)
    st_start = np.empty(cap, np.int64)
    st_end = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    sp = 0
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = n_rows
    st_depth[0] = 0
    sp = 1
    n_nodes = 1
    maxb = 0
    for j in range(k):
        if nbins[j] > maxb:
            maxb = nbins[j]
    hw = np.zeros(maxb, np.float64)
    hs = np.zeros(maxb, np.float64)
    hc = np.zeros(maxb, np.int64)
    feats = np.arange(k)

    while sp > 0:
        sp -= 1
        node = st_node[sp]
        start = st_start[sp]
        end = st_end[sp]
        depth = st_depth[sp]
        W = 0.0
        S = 0.0
        SS = 0.0
        for t in range(start, end):
            r = idx[t]
            W += weight[r]
            S += weight[r] * target[r]
            SS += weight[r] * target[r] * target[r]
        value[node] = S / W if W > 0 else 0.0
        node_w[node] = W
        count = end - start
        if depth >= max_depth or count < 2 * min_leaf or W <= 0:
            continue
        if SS - S * S / W <= 1e-12 * max(W, 1.0):
            continue

        # partial Fisher-Yates for the candidate features
        for a in range(max_features if max_features < k else 0):
            b = a + np.random.randint(0, k - a)
            tmp = feats[a]
            feats[a] = feats[b]
            feats[b] = tmp

        best_gain = 1e-12
        best_f = -1
        best_b = -1
        parent = S * S / W
        for fi in range(max_features):
            f = feats[fi]
            nb = nbins[f]
            for b in range(nb):
                hw[b] = 0.0
                hs[b] = 0.0
                hc[b] = 0
            lo = nb
            hi = -1
            for t in range(start, end):
                r = idx[t]
                c = codes[r, f]
                hw[c] += weight[r]
                hs[c] += weight[r] * target[r]
                hc[c] += 1
                if c < lo:
                    lo = c
                if c > hi:
                    hi = c
            if hi <= lo:
                continue
            if random_split:
                # uniform cut between the node's smallest and largest bin
                cut = lo + np.random.randint(0, hi - lo)
                wl = 0.0
                sl = 0.0
                cl = 0
                for b in range(lo, cut + 1):
                    wl += hw[b]
                    sl += hs[b]
                    cl += hc[b]
                cr = count - cl
                wr = W - wl
                if cl < min_leaf or cr < min_leaf or wl <= 0 or wr <= 0:
                    continue
                sr = S - sl
                gain = sl * sl / wl + sr * sr / wr - parent
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_b = cut
                continue
            wl = 0.0
            sl = 0.0
            cl = 0
            for b in range(lo, hi):
                wl += hw[b]
                sl += hs[b]
                cl += hc[b]
                if hc[b] == 0:
                    continue
                cr = count - cl
                if cl < min_leaf:
                    continue
                if cr < min_leaf:
                    break
                wr = W - wl
                if wl <= 0 or wr <= 0:
                    continue
                sr = S - sl
                gain = sl * sl / wl + sr * sr / wr - parent
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_b = b
        if best_f < 0:
            continue
        # partition idx[start:end] in place
        i = start
        j = end - 1
        while i <= j:
            if codes[idx[i], best_f] <= best_b:
                i += 1
            else:
                tmp = idx[i]
                idx[i] = idx[j]
                idx[j] = tmp
                j -= 1
        mid = i
        feature[node] = best_f
        thr_bin[node] = best_b
        l = n_nodes
        rnode = n_nodes + 1
        n_nodes += 2
        left[node] = l
        right[node] = rnode
        st_node[sp] = rnode
        st_start[sp] = mid
        st_end[sp] = end
        st_depth[sp] = depth + 1
        sp += 1
        st_node[sp] = l
        st_start[sp] = start
        st_end[sp] = mid
        st_depth[sp] = depth + 1
        sp += 1
    return (feature[:n_nodes], thr_bin[:n_nodes], left[:n_nodes], right[:n_nodes],
            value[:n_nodes], node_w[:n_nodes])


@numba.njit(cache=True)
def _apply(X, feature, threshold, left, right, roots):
    """Leaf index (into the stacked node arrays) of every row for every tree."""
    n = X.shape[0]
    m = roots.shape[0]
    out = np.empty((n, m), np.int64)
    for i in range(n):
        for t in range(m):
            node = roots[t]
            while left[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            out[i, t] = node
    return out


@numba.njit(cache=True)
def _predict_sum(X, feature, threshold, left, right, value, roots, coef):
    n = X.shape[0]
    m = roots.shape[0]
    out = np.zeros(n, np.float64)
    for i in range(n):
        acc = 0.0
        for t in range(m):
            node = roots[t]
            while left[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            acc += coef[t] * value[node]
        out[i] = acc
    return out


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self):
        return len(self.feature)

    def used_features(self):
        return set(int(f) for f in self.feature[self.left >= 0])


def grow_tree(codes, cuts, target, weight=None, *, max_depth=None, min_leaf=1, max_features=None,
              random_split=False, seed=0, rows=None) -> Tree:
    n, k = codes.shape
    weight = np.ones(n) if weight is None else np.asarray(weight, dtype=np.float64)
    if rows is None:
        rows = np.flatnonzero(weight > 0)
    nbins = np.array([len(c) + 1 for c in cuts], dtype=np.int64)
    mf = k if max_features is None else int(min(max(max_features, 1), k))
    depth = UNBOUNDED if max_depth is None else int(max_depth)
    f, tb, l, r, v, _ = _build(codes, nbins, np.asarray(target, dtype=np.float64), weight,
                               np.asarray(rows, dtype=np.int64), depth, int(max(min_leaf, 1)), mf,
                               bool(random_split), int(seed % (2**32 - 1)))
    thr = np.zeros(len(f))
    internal = l >= 0
    thr[internal] = [cuts[ff][bb] for ff, bb in zip(f[internal], tb[internal])]
    return Tree(f, thr, l, r, v)


class Forest:
    """Stacked node arrays of several trees, evaluated in one compiled loop."""

    def __init__(self, trees, coef=None):
        sizes = np.array([t.n_nodes for t in trees], dtype=np.int64)
        self.roots = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
        off = self.roots
        self.feature = np.concatenate([np.maximum(t.feature, 0) for t in trees])
        self.threshold = np.concatenate([t.threshold for t in trees])
        self.left = np.concatenate([np.where(t.left >= 0, t.left + o, -1) for t, o in zip(trees, off)])
        self.right = np.concatenate([np.where(t.right >= 0, t.right + o, -1) for t, o in zip(trees, off)])
        self.value = np.concatenate([t.value for t in trees])
        self.coef = np.ones(len(trees)) if coef is None else np.asarray(coef, dtype=np.float64)
        self.trees = trees

    def predict_sum(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _predict_sum(X, self.feature, self.threshold, self.left, self.right, self.value,
                            self.roots, self.coef)

    def apply(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _apply(X, self.feature, self.threshold, self.left, self.right, self.roots)


def _resolve_max_features(spec, k):
    if spec is None or spec == "all":
        return k
    if spec == "sqrt":
        return max(1, int(np.sqrt(k)))
    if spec == "log2":
        return max(1, int(np.log2(k)))
    if isinstance(spec, float) and spec <= 1.0:
        return max(1, int(round(spec * k)))
    return int(spec)


class DecisionTree:
    def __init__(self, max_depth=None, min_leaf=1, max_features=None, random_split=False, seed=0):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.max_features = max_features
        self.random_split = random_split
        self.seed = seed

    def fit(self, X, y):
        codes, cuts = make_bins(X)
        tree = grow_tree(codes, cuts, y.astype(float), max_depth=self.max_depth, min_leaf=self.min_leaf,
                         max_features=_resolve_max_features(self.max_features, X.shape[1]),
                         random_split=self.random_split, seed=self.seed)
        self.forest_ = Forest([tree])
        return self

    def proba1(self, X):
        return np.clip(self.forest_.predict_sum(X), 0.0, 1.0)

    def used_features(self):
        return self.forest_.trees[0].used_features()


class RandomForest:
    """Bagged CART trees; ``extra=True`` gives extremely randomized trees."""

    def __init__(self, n_trees=100, max_depth=None, min_leaf=1, max_features="sqrt", bootstrap=True,
                 extra=False, seed=0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.extra = extra
        self.seed = seed

    def fit(self, X, y):
        n, k = X.shape
        codes, cuts = make_bins(X)
        mf = _resolve_max_features(self.max_features, k)
        rng = np.random.default_rng(self.seed)
        trees = []
        target = y.astype(float)
        for _ in range(self.n_trees):
            tree_seed = int(rng.integers(0, 2**31 - 1))
            if self.bootstrap:
                w = np.bincount(rng.integers(0, n, n), minlength=n).astype(float)
            else:
                w = np.ones(n)
            trees.append(grow_tree(codes, cuts, target, w, max_depth=self.max_depth, min_leaf=self.min_leaf,
                                   max_features=mf, random_split=self.extra, seed=tree_seed))
        self.forest_ = Forest(trees, np.full(len(trees), 1.0 / len(trees)))
        return self

    def proba1(self, X):
        return np.clip(self.forest_.predict_sum(X), 0.0, 1.0)
