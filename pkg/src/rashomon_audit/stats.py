"""Spearman correlation, Benjamini-Hochberg adjustment and post-hoc power."""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats as sps

from .errors import ConstantInput, DegenerateR, OutOfRange, TooShort


@dataclass
class CorrelationResult:
    r: float
    p: float
    p_cor: float
    power: float
    n: int
    label: str = ""

    def as_dict(self):
        return asdict(self)


def midranks(x) -> np.ndarray:
    """Ranks 1..n with tied values sharing their average rank."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x))
    xs = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _pearson(a, b):
    a = a - a.mean()
    b = b - b.mean()
    return float(a @ b / math.sqrt((a @ a) * (b @ b)))


def spearman(x, y, method: str = "t") -> tuple:
    """Spearman rho and two-sided p-value.

    ``method="t"`` uses t = r sqrt((n-2)/(1-r^2)) on n-2 degrees of freedom;
    ``method="exact"`` enumerates all permutations of y (n <= 8).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("x and y differ in length")
    n = len(x)
    if n < 4:
        raise TooShort(f"need n >= 4 pairs, got {n}")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ConstantInput("Spearman correlation undefined for constant input")
    rx, ry = midranks(x), midranks(y)
    r = min(max(_pearson(rx, ry), -1.0), 1.0)
    if method == "exact":
        return r, exact_permutation_p(rx, ry, r)
    if abs(r) >= 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    p = 2.0 * sps.t.sf(abs(t), n - 2)
    return r, float(min(p, 1.0))


def exact_permutation_p(rx, ry, r_obs) -> float:
    n = len(rx)
    if n > 8:
        raise ValueError("exact permutation p-value limited to n <= 8")
    hits = total = 0
    for perm in itertools.permutations(ry):
        total += 1
        if abs(_pearson(rx, np.array(perm))) >= abs(r_obs) - 1e-12:
            hits += 1
    return hits / total


def bh_fdr(p_values) -> np.ndarray:
    """Benjamini-Hochberg step-up adjusted p-values, in input order."""
    p = np.asarray(p_values, dtype=float)
    if p.ndim != 1:
        p = p.ravel()
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise OutOfRange("p-values must lie in [0, 1]")
    m = len(p)
    if m == 0:
        return p.copy()
    order = np.argsort(p, kind="mergesort")
    q = p[order] * m / np.arange(1, m + 1)
    q = np.minimum.accumulate(q[::-1])[::-1]
    out = np.empty(m)
    out[order] = np.minimum(q, 1.0)
    return np.maximum(out, p)


def posthoc_power(r: float, n: int, alpha: float = 0.05) -> float:
    """Fisher-z approximation: Phi(sqrt(n-3) |atanh r| - z_{1-alpha/2})."""
    if not abs(r) < 1.0:
        raise DegenerateR(f"|r| must be < 1, got {r}")
    if n < 4:
        raise TooShort(f"need n >= 4, got {n}")
    z = math.sqrt(n - 3) * abs(math.atanh(r)) - sps.norm.ppf(1 - alpha / 2)
    return float(sps.norm.cdf(z))


def correlation_table(series: dict, alpha: float = 0.05) -> list:
    """Spearman + BH + power for ``{label: (x, y)}``; undefined rows are skipped with a reason.

    Returns (rows, notes).
    """
    rows, notes = [], []
    for label, (x, y) in series.items():
        try:
            r, p = spearman(x, y)
        except (ConstantInput, TooShort) as exc:
            notes.append(f"{label}: {exc}")
            continue
        power = 1.0 if abs(r) >= 1.0 else posthoc_power(r, len(x), alpha)
        rows.append(CorrelationResult(r=r, p=p, p_cor=p, power=power, n=len(x), label=label))
    if rows:
        adj = bh_fdr([row.p for row in rows])
        for row, q in zip(rows, adj):
            row.p_cor = float(q)
    return rows, notes
