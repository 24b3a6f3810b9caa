"""Linear families: logistic regression, ridge classifier, linear SVM."""
import numpy as np
from scipy.optimize import minimize
from scipy.special import expit


def logistic_objective(theta, X, y, l2):
    """Penalised log-loss and its gradient; ``theta = [w..., b]``, the bias is unpenalised.

    J = sum_i log(1 + exp(-s_i z_i)) + l2/2 ||w||^2,  z = Xw + b,  s = 2y - 1
    """
    w, b = theta[:-1], theta[-1]
    z = X @ w + b
    # log(1 + exp(-s z)) computed stably
    s = 2.0 * y - 1.0
    loss = np.logaddexp(0.0, -s * z).sum() + 0.5 * l2 * (w @ w)
    r = expit(z) - y
    grad = np.empty_like(theta)
    grad[:-1] = X.T @ r + l2 * w
    grad[-1] = r.sum()
    return loss, grad


class LogisticRegression:
    """L2 logistic regression fitted by damped Newton iterations."""

    def __init__(self, l2=1.0, max_iter=1000, tol=1e-6):
        self.l2 = l2
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y):
        n, k = X.shape
        y = y.astype(float)
        A = np.column_stack([X, np.ones(n)])
        theta = np.zeros(k + 1)
        prior = np.clip(y.mean(), 1e-6, 1 - 1e-6)
        theta[-1] = np.log(prior / (1 - prior))
        pen = np.full(k + 1, self.l2)
        pen[-1] = 0.0
        loss, grad = logistic_objective(theta, X, y, self.l2)
        self.converged_ = False
        self.n_iter_ = 0
        for it in range(self.max_iter):
            if np.linalg.norm(grad) <= self.tol:
                self.converged_ = True
                break
            p = expit(A @ theta)
            h = p * (1 - p)
            H = (A * h[:, None]).T @ A + np.diag(pen) + 1e-12 * np.eye(k + 1)
            try:
                step = np.linalg.solve(H, grad)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(H, grad, rcond=None)[0]
            t = 1.0
            while True:
                cand = theta - t * step
                c_loss, c_grad = logistic_objective(cand, X, y, self.l2)
                if c_loss <= loss - 1e-4 * t * (grad @ step) or t < 1e-10:
                    break
                t *= 0.5
            theta, loss, grad = cand, c_loss, c_grad
            self.n_iter_ = it + 1
        else:
            self.converged_ = np.linalg.norm(grad) <= self.tol
        self.coef_ = theta[:-1]
        self.intercept_ = theta[-1]
        return self

    def decision(self, X):
        return X @ self.coef_ + self.intercept_

    def proba1(self, X):
        return expit(self.decision(X))


class RidgeClassifier:
    """Ridge regression on +/-1 targets; probability is the logistic link of the score."""

    def __init__(self, l2=1.0):
        self.l2 = l2

    def fit(self, X, y):
        t = 2.0 * y - 1.0
        mx = X.mean(axis=0)
        mt = t.mean()
        Xc = X - mx
        k = X.shape[1]
        self.coef_ = np.linalg.solve(Xc.T @ Xc + self.l2 * np.eye(k), Xc.T @ (t - mt))
        self.intercept_ = mt - mx @ self.coef_
        return self

    def decision(self, X):
        return X @ self.coef_ + self.intercept_

    def proba1(self, X):
        return expit(self.decision(X))


class LinearSVM:
    """Primal L2-regularised squared-hinge SVM (no probability calibration)."""

    def __init__(self, l2=1.0, tol=1e-6, max_iter=1000):
        self.l2 = l2
        self.tol = tol
        self.max_iter = max_iter

    @staticmethod
    def objective(theta, X, s, l2):
        w, b = theta[:-1], theta[-1]
        margin = 1.0 - s * (X @ w + b)
        active = margin > 0
        m = np.where(active, margin, 0.0)
        f = 0.5 * l2 * (w @ w) + (m * m).sum()
        g = np.empty_like(theta)
        coef = -2.0 * m * s
        g[:-1] = l2 * w + X.T @ coef
        g[-1] = coef.sum()
        return f, g

    def fit(self, X, y):
        s = 2.0 * y - 1.0
        theta0 = np.zeros(X.shape[1] + 1)
        res = minimize(self.objective, theta0, args=(X, s, self.l2), jac=True, method="L-BFGS-B",
                       options={"gtol": self.tol, "maxiter": self.max_iter})
        self.converged_ = bool(res.success)
        self.coef_ = res.x[:-1]
        self.intercept_ = res.x[-1]
        return self

    def decision(self, X):
        return X @ self.coef_ + self.intercept_

    def proba1(self, X):
        return expit(self.decision(X))
