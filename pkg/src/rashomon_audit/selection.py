"""Benchmark candidate families by cross-validated kappa, keep the best few,
and check which of them fall inside the epsilon-Rashomon set."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import AllFamiliesFailed
from .parallel import pmap
from .zoo import ModelSpec, best_of, candidate_specs, cv_kappas


@dataclass
class RankedEntry:
    spec: ModelSpec
    mean_kappa: float
    sd_kappa: float
    fold_kappas: np.ndarray

    @property
    def family(self):
        return self.spec.family

    @property
    def failed(self):
        return not np.isfinite(self.mean_kappa)


@dataclass
class SelectionResult:
    ranked: list
    top: list
    baseline: RankedEntry | None = None
    search: dict = field(default_factory=dict)  # family -> [(spec, mean kappa)] in draw order

    @property
    def top3(self):
        return [e.spec for e in self.top]


@dataclass
class RashomonSet:
    reference_loss: float
    epsilon: float
    members: list
    losses: dict
    top_outside: list = field(default_factory=list)


def _summarise(spec, kappas):
    if np.all(np.isfinite(kappas)):
        return RankedEntry(spec, float(np.mean(kappas)), float(np.std(kappas)), kappas)
    return RankedEntry(spec, float("-inf"), float("inf"), kappas)


def _job(args):
    spec, X, y, folds = args
    return cv_kappas(spec, X, y, folds)


def rank_key(e: RankedEntry):
    return (-e.mean_kappa, e.sd_kappa, e.family)


def select(X, y, families, folds, budget: int = 20, seed: int = 0, top_k: int = 3, workers=1,
           baseline: bool = True) -> SelectionResult:
    """Random-search every family, rank the winners by mean CV kappa.

    Ties: higher mean, then lower sd, then family name.  The default
    logistic regression baseline is scored on the same folds.
    """
    families = list(dict.fromkeys(families))
    if len(families) < top_k:
        raise ValueError(f"need at least {top_k} families, got {len(families)}")
    jobs, owners = [], []
    for fam in families:
        for spec in candidate_specs(fam, budget, seed):
            jobs.append((spec, X, y, folds))
            owners.append(fam)
    if baseline:
        jobs.append((ModelSpec("lr", {}, seed), X, y, folds))
        owners.append(None)
    scores = pmap(_job, jobs, workers)

    ranked, search = [], {}
    for fam in families:
        table = [(j[0], s) for j, s, o in zip(jobs, scores, owners) if o == fam]
        search[fam] = [(sp, float(np.mean(s)) if np.all(np.isfinite(s)) else float("-inf")) for sp, s in table]
        spec, kap = table[best_of(table)]
        ranked.append(_summarise(spec, kap))
    ranked.sort(key=rank_key)
    ok = [e for e in ranked if not e.failed]
    if not ok:
        raise AllFamiliesFailed("every candidate family failed to train")
    base = _summarise(jobs[-1][0], scores[-1]) if baseline else None
    return SelectionResult(ranked=ranked, top=ok[:top_k], baseline=base, search=search)


def rashomon_members(losses: dict, epsilon: float, tol: float = 1e-12) -> list:
    """Names whose loss is within ``epsilon`` of the smallest loss."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    finite = {k: v for k, v in losses.items() if np.isfinite(v)}
    best = min(finite.values())
    return [k for k, v in finite.items() if v <= best + epsilon + tol]


def rashomon_membership(sel: SelectionResult, epsilon: float = 0.05) -> RashomonSet:
    """Loss is 1 - mean CV kappa, so the kappa ranking and the set agree."""
    losses = {e.family: 1.0 - e.mean_kappa for e in sel.ranked}
    names = rashomon_members(losses, epsilon)
    members = [e.spec for e in sel.ranked if e.family in names]
    outside = [e.family for e in sel.top if e.family not in names]
    if outside:
        warnings.warn(f"selected models outside the Rashomon set at epsilon={epsilon}: {outside}", stacklevel=2)
    finite = [v for v in losses.values() if np.isfinite(v)]
    return RashomonSet(min(finite), epsilon, members, losses, outside)
