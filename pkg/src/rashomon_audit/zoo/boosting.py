"""AdaBoost (SAMME, depth-1 stumps) and log-loss gradient boosting."""
import numpy as np
from scipy.special import expit

from .trees import Forest, grow_tree, make_bins


class AdaBoost:
    def __init__(self, n_estimators=50, learning_rate=1.0, seed=0):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.seed = seed

    def fit(self, X, y):
        n = X.shape[0]
        codes, cuts = make_bins(X)
        w = np.full(n, 1.0 / n)
        target = y.astype(float)
        sign = 2.0 * y - 1.0
        stumps, alphas = [], []
        for m in range(self.n_estimators):
            stump = grow_tree(codes, cuts, target, w, max_depth=1, seed=self.seed + m)
            # recode leaves as +/-1 votes
            stump.value = np.where(stump.value > 0.5, 1.0, -1.0)
            h = Forest([stump]).predict_sum(X)
            miss = h != sign
            err = w[miss].sum() / w.sum()
            if err <= 0.0:
                stumps.append(stump)
                alphas.append(1.0)
                break
            if err >= 0.5:
                if not stumps:
                    stumps.append(stump)
                    alphas.append(1.0)
                break
            alpha = self.learning_rate * np.log((1.0 - err) / err)
            stumps.append(stump)
            alphas.append(alpha)
            w = w * np.exp(alpha * miss)
            w /= w.sum()
        alphas = np.array(alphas)
        self.forest_ = Forest(stumps, alphas / alphas.sum())
        return self

    def proba1(self, X):
        # two-class SAMME: softmax of (-d/2, d/2) with d the normalised weighted vote
        return expit(self.forest_.predict_sum(X))


class GradientBoosting:
    def __init__(self, n_estimators=100, learning_rate=0.1, max_depth=3, min_leaf=1, seed=0):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.seed = seed

    def fit(self, X, y):
        codes, cuts = make_bins(X)
        yf = y.astype(float)
        prior = np.clip(yf.mean(), 1e-6, 1 - 1e-6)
        self.init_ = float(np.log(prior / (1 - prior)))
        F = np.full(len(y), self.init_)
        trees = []
        for m in range(self.n_estimators):
            p = expit(F)
            resid = yf - p
            tree = grow_tree(codes, cuts, resid, max_depth=self.max_depth, min_leaf=self.min_leaf,
                             seed=self.seed + m)
            leaves = Forest([tree]).apply(X)[:, 0]
            num = np.bincount(leaves, weights=resid, minlength=tree.n_nodes)
            den = np.bincount(leaves, weights=p * (1 - p), minlength=tree.n_nodes)
            # Newton step per leaf
            tree.value = np.where(np.abs(den) > 1e-12, num / np.where(den == 0, 1, den), 0.0)
            F += self.learning_rate * tree.value[leaves]
            trees.append(tree)
        self.forest_ = Forest(trees, np.full(len(trees), self.learning_rate))
        return self

    def proba1(self, X):
        return expit(self.init_ + self.forest_.predict_sum(X))
