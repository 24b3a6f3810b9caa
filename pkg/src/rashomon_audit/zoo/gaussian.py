"""Gaussian generative families: LDA, QDA and Gaussian naive Bayes."""
import numpy as np
from scipy.special import expit

REPAIR_RIDGE = 1e-4


def shrink(cov, shrinkage):
    k = cov.shape[0]
    mu = np.trace(cov) / k
    return (1.0 - shrinkage) * cov + shrinkage * mu * np.eye(k)


def is_singular(cov, rcond=1e-10):
    ev = np.linalg.eigvalsh(cov)
    return ev[0] <= rcond * max(ev[-1], 1e-300)


class LDA:
    def __init__(self, shrinkage=0.0):
        self.shrinkage = shrinkage

    def fit(self, X, y):
        n, k = X.shape
        self.repaired_ = False
        mus = [X[y == c].mean(axis=0) for c in (0, 1)]
        resid = np.vstack([X[y == c] - mus[c] for c in (0, 1)])
        cov = shrink(resid.T @ resid / n, self.shrinkage)
        if is_singular(cov):
            cov = cov + REPAIR_RIDGE * np.eye(k)
            self.repaired_ = True
        inv = np.linalg.inv(cov)
        prior1 = y.mean()
        self.coef_ = inv @ (mus[1] - mus[0])
        self.intercept_ = (-0.5 * (mus[1] @ inv @ mus[1] - mus[0] @ inv @ mus[0])
                           + np.log(prior1 / (1 - prior1)))
        return self

    def proba1(self, X):
        return expit(X @ self.coef_ + self.intercept_)


class QDA:
    def __init__(self, shrinkage=0.0):
        self.shrinkage = shrinkage

    def fit(self, X, y):
        k = X.shape[1]
        self.repaired_ = False
        self.params_ = []
        for c in (0, 1):
            Xc = X[y == c]
            mu = Xc.mean(axis=0)
            d = Xc - mu
            cov = d.T @ d / max(len(Xc) - 1, 1)
            cov = shrink(cov, self.shrinkage)
            if is_singular(cov):
                cov = cov + REPAIR_RIDGE * np.eye(k)
                self.repaired_ = True
            L = np.linalg.cholesky(cov)
            logdet = 2.0 * np.log(np.diag(L)).sum()
            self.params_.append((mu, L, logdet, np.log(len(Xc) / len(X))))
        return self

    def _loglik(self, X, c):
        mu, L, logdet, logprior = self.params_[c]
        z = np.linalg.solve(L, (X - mu).T)
        return -0.5 * (z * z).sum(axis=0) - 0.5 * logdet + logprior

    def proba1(self, X):
        return expit(self._loglik(X, 1) - self._loglik(X, 0))


class GaussianNB:
    def __init__(self, var_smoothing=1e-9):
        self.var_smoothing = var_smoothing

    def fit(self, X, y):
        eps = self.var_smoothing * max(X.var(axis=0).max(), 1e-300)
        self.mean_ = np.array([X[y == c].mean(axis=0) for c in (0, 1)])
        self.var_ = np.array([X[y == c].var(axis=0) for c in (0, 1)]) + eps
        self.logprior_ = np.log(np.array([(y == 0).mean(), (y == 1).mean()]))
        return self

    def _joint(self, X, c):
        m, v = self.mean_[c], self.var_[c]
        return self.logprior_[c] - 0.5 * (np.log(2 * np.pi * v).sum() + (((X - m) ** 2) / v).sum(axis=1))

    def proba1(self, X):
        return expit(self._joint(X, 1) - self._joint(X, 0))
