"""Binary classification scores from confusion counts.

Degenerate denominators map to 0 for F1, MCC and kappa so that sweep
tables stay total.
"""
from dataclasses import asdict, dataclass
import math

import numpy as np

from .errors import AuditError


class LengthMismatch(AuditError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("counts must be non-negative")
        if self.total < 1:
            raise ValueError("need at least one instance")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class PerfRecord:
    acc: float
    f1: float
    mcc: float
    kappa: float

    def as_dict(self):
        return asdict(self)


def confusion(y_true, y_pred) -> ConfusionCounts:
    t = np.asarray(y_true).astype(int)
    p = np.asarray(y_pred).astype(int)
    if t.shape != p.shape:
        raise LengthMismatch(f"{t.shape} vs {p.shape}")
    if t.size < 1:
        raise LengthMismatch("empty label vectors")
    return ConfusionCounts(
        tp=int(((t == 1) & (p == 1)).sum()),
        fp=int(((t == 0) & (p == 1)).sum()),
        fn=int(((t == 1) & (p == 0)).sum()),
        tn=int(((t == 0) & (p == 0)).sum()),
    )


def kappa(c: ConfusionCounts) -> float:
    """Cohen's kappa, (p_o - p_e) / (1 - p_e); 0 when p_e == 1."""
    n = c.total
    p_o = (c.tp + c.tn) / n
    p_e = ((c.tp + c.fp) * (c.tp + c.fn) + (c.fn + c.tn) * (c.fp + c.tn)) / (n * n)
    if p_e >= 1.0:
        return 0.0
    return (p_o - p_e) / (1.0 - p_e)


def mcc(c: ConfusionCounts) -> float:
    denom = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    if denom == 0:
        return 0.0
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(denom)


def f1(c: ConfusionCounts) -> float:
    denom = 2 * c.tp + c.fp + c.fn
    return 0.0 if denom == 0 else 2 * c.tp / denom


def score(c: ConfusionCounts) -> PerfRecord:
    return PerfRecord(acc=(c.tp + c.tn) / c.total, f1=f1(c), mcc=mcc(c), kappa=kappa(c))


def score_labels(y_true, y_pred) -> PerfRecord:
    return score(confusion(y_true, y_pred))
