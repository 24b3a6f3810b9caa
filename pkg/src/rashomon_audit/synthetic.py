"""Synthetic data with known ("planted") feature importance."""
from __future__ import annotations

import numpy as np

from .data import Dataset, dataset_from_arrays
from .seeding import derive_seed


def make_planted(n: int = 4096, k: int = 10, informative: int = 3, noise: float = 0.1, seed: int = 0,
                 weights=None) -> Dataset:
    """Gaussian features; the label is the sign of a linear score over the
    first ``informative`` features, then a ``noise`` fraction of labels is flipped.

    Default weights decrease (3, 2, 1, ...) so the true ranking is unambiguous.
    """
    if not 1 <= informative <= k:
        raise ValueError("need 1 <= informative <= k")
    if not 0.0 <= noise < 0.5:
        raise ValueError("noise must lie in [0, 0.5)")
    rng = np.random.default_rng(derive_seed(seed, "planted", n, k))
    X = rng.standard_normal((n, k))
    w = np.zeros(k)
    w[:informative] = np.asarray(weights, float) if weights is not None else np.arange(informative, 0, -1)
    y = (X @ w > 0).astype(np.int64)
    flip = rng.random(n) < noise
    y[flip] = 1 - y[flip]
    return dataset_from_arrays(X, y, [f"x{i}" for i in range(k)], name=f"planted-{n}x{k}")


def write_csv(d: Dataset, path, label_column: str = "label"):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(list(d.feature_names) + [label_column]) + "\n")
        for row, lab in zip(d.features, d.labels):
            fh.write(",".join(repr(float(v)) for v in row) + f",{int(lab)}\n")
