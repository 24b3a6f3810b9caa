"""Agreement between feature-importance vectors.

All functions accept either :class:`GlobalImportance` objects or plain
vectors.  Rankings sort by descending magnitude with ties broken by the
lower feature index.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import BadJ, DimensionMismatch, SizeMismatch, TooFewModels


def _vec(g) -> np.ndarray:
    return np.asarray(getattr(g, "per_feature", g), dtype=float)


def _same_k(vectors):
    ks = {len(v) for v in vectors}
    if len(ks) != 1:
        raise DimensionMismatch(f"importance vectors have different lengths {sorted(ks)}")
    return ks.pop()


@dataclass(frozen=True)
class FeatureRanking:
    ordered_indices: tuple
    j: int


def rank_top_j(g, j: int) -> FeatureRanking:
    v = np.abs(_vec(g))
    if not 1 <= j <= len(v):
        raise BadJ(f"j={j} outside [1, {len(v)}]")
    order = np.lexsort((np.arange(len(v)), -v))
    return FeatureRanking(tuple(int(i) for i in order[:j]), j)


def top_j_similarity(a, b, j: int) -> float:
    """Shared fraction of the two top-j feature sets."""
    va, vb = _vec(a), _vec(b)
    _same_k([va, vb])
    sa = set(rank_top_j(va, j).ordered_indices)
    sb = set(rank_top_j(vb, j).ordered_indices)
    return len(sa & sb) / j


def top_j_instancewise(phi_a, phi_b, j: int) -> float:
    """Per-instance variant: mean over paired rows of the top-j overlap of |phi|."""
    A, B = np.atleast_2d(phi_a), np.atleast_2d(phi_b)
    if A.shape != B.shape:
        raise DimensionMismatch(f"{A.shape} vs {B.shape}")
    return float(np.mean([top_j_similarity(x, y, j) for x, y in zip(A, B)]))


def _pairs(n):
    if n < 2:
        raise TooFewModels(f"need at least two models, got {n}")
    return list(itertools.combinations(range(n), 2))


def top_j_pairwise(models, j: int) -> float:
    vs = [_vec(m) for m in models]
    _same_k(vs)
    return float(np.mean([top_j_similarity(vs[a], vs[b], j) for a, b in _pairs(len(vs))]))


def mas(models, mode: str = "feature") -> np.ndarray:
    """Per-feature mean |importance| over the group, or its scalar average over features."""
    vs = np.abs(np.array([_vec(m) for m in models]))
    _same_k(vs)
    per_feature = vs.mean(axis=0)
    if mode == "feature":
        return per_feature
    if mode == "scalar":
        return np.full_like(per_feature, per_feature.mean())
    raise ValueError(f"unknown mas mode {mode!r}")


def weight_vectors(models, mode: str = "feature") -> list:
    m = mas(models, mode)
    return [np.abs(_vec(g)) * m for g in models]


def wcossim(a, b) -> float:
    """Cosine of two weighted vectors; 0 when either is the zero vector."""
    return wcossim_flagged(a, b)[0]


def wcossim_flagged(a, b):
    va, vb = _vec(a), _vec(b)
    _same_k([va, vb])
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        return 0.0, True
    return float(np.clip(va @ vb / (na * nb), -1.0, 1.0)), False


def pairwise_wcossim(models, mode: str = "feature") -> dict:
    """{(a, b): wcossim} for every unordered pair, weights from the whole group."""
    ws = weight_vectors(models, mode)
    return {(a, b): wcossim(ws[a], ws[b]) for a, b in _pairs(len(ws))}


def wcossim_group(models, mode: str = "feature") -> float:
    return float(np.mean(list(pairwise_wcossim(models, mode).values())))


def similarity_to_reference(model, reference, mode: str = "feature") -> float:
    wa, wb = weight_vectors([model, reference], mode)
    return wcossim(wa, wb)


@dataclass
class ConsensusVector:
    per_feature: np.ndarray
    M: int
    N: int


def consensus(items, size: int | None = None) -> ConsensusVector:
    """Mean absolute SHAP value over all models and instances.

    ``items`` are Attributions (per-instance values) or GlobalImportance
    vectors.  GlobalImportance entries carrying a ``size`` must agree on it.
    """
    items = list(items)
    if not items:
        raise TooFewModels("consensus needs at least one model")
    sizes = {getattr(it, "size", None) for it in items} - {None, 0}
    if len(sizes) > 1 or (size is not None and sizes and sizes != {size}):
        raise SizeMismatch(f"models explained at different sample sizes {sorted(sizes)}")
    rows = []
    for it in items:
        if hasattr(it, "values") and not hasattr(it, "per_feature"):
            rows.append(np.abs(np.asarray(it.values)).mean(axis=0))
        else:
            rows.append(np.abs(_vec(it)))
    _same_k(rows)
    n = size if size is not None else (sizes.pop() if sizes else 0)
    return ConsensusVector(np.mean(rows, axis=0), len(rows), int(n))
