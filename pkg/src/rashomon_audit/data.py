"""Tabular ingestion, stratified splitting, fold planning and the sample-size grid."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateClass,
    EmptyFile,
    MissingLabelColumn,
    NonBinaryLabel,
    NonFiniteValue,
    SizeTooLarge,
    TooFewInstances,
    TooFewPerClass,
    TrainTooSmall,
)
from .seeding import derive_seed

MISSING_TOKENS = frozenset({"", "na", "nan", "null", "none", "?"})


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple
    name: str = "dataset"

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels)
        if X.ndim != 2:
            raise ValueError("features must be a 2-d matrix")
        n, k = X.shape
        if n < 2 or k < 1:
            raise TooFewInstances(f"need N >= 2 rows and K >= 1 features, got {X.shape}")
        if y.shape != (n,):
            raise ValueError(f"labels must have length {n}")
        if not np.isin(y, (0, 1)).all():
            raise NonBinaryLabel("labels must be 0/1")
        if y.min() == y.max():
            raise NonBinaryLabel("labels contain a single class")
        bad = np.argwhere(~np.isfinite(X))
        if len(bad):
            r, c = bad[0]
            raise NonFiniteValue(int(r), self.feature_names[c] if c < len(self.feature_names) else int(c), X[r, c])
        names = tuple(str(s) for s in self.feature_names)
        if len(names) != k or len(set(names)) != k:
            raise ValueError("feature_names must be unique and of length K")
        X.setflags(write=False)
        y = y.astype(np.int64)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def k(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class IngestOptions:
    delimiter: str = ","
    label_map: Mapping[str, int] | None = None
    impute: bool = False  # mean-impute non-finite numeric cells instead of rejecting
    one_hot: bool = False


@dataclass(frozen=True)
class SplitPlan:
    train_indices: np.ndarray
    test_indices: np.ndarray
    seed: int = 0

    def __post_init__(self):
        tr = np.asarray(self.train_indices, dtype=np.int64)
        te = np.asarray(self.test_indices, dtype=np.int64)
        if np.intersect1d(tr, te).size:
            raise ValueError("train and test indices overlap")
        object.__setattr__(self, "train_indices", tr)
        object.__setattr__(self, "test_indices", te)


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: np.ndarray

    def train_mask(self, fold: int) -> np.ndarray:
        return self.assignments != fold


@dataclass(frozen=True)
class SampleGrid:
    sizes: tuple = field(default_factory=tuple)

    def __iter__(self):
        return iter(self.sizes)

    def __len__(self):
        return len(self.sizes)


# ---------------------------------------------------------------- ingestion

def _read_rows(path: Path, delimiter: str):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh, delimiter=delimiter) if r and any(c.strip() for c in r)]
    if not rows:
        raise EmptyFile(f"{path}: no header row")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise EmptyFile(f"{path}: header but no data rows")
    for i, r in enumerate(body):
        if len(r) != len(header):
            raise ValueError(f"{path}: row {i + 1} has {len(r)} fields, header has {len(header)}")
    return header, body


def _encode_labels(raw: list, label_map):
    out = np.empty(len(raw), dtype=np.int64)
    for i, v in enumerate(raw):
        v = v.strip()
        if label_map is not None:
            if v not in label_map:
                raise NonBinaryLabel(f"row {i}: label {v!r} not in label map")
            out[i] = int(label_map[v])
            continue
        try:
            f = float(v)
        except ValueError:
            raise NonBinaryLabel(f"row {i}: label {v!r} is not 0/1; supply a label map") from None
        if f not in (0.0, 1.0):
            raise NonBinaryLabel(f"row {i}: label {v!r} is not 0/1")
        out[i] = int(f)
    if not np.isin(out, (0, 1)).all():
        raise NonBinaryLabel("label map must send values to 0/1")
    if out.min() == out.max():
        raise NonBinaryLabel("labels contain a single class")
    return out


def _encode_columns(names, columns, options: IngestOptions, row_offset=0):
    """Numeric columns as floats, anything else integer-coded by first appearance."""
    feats, out_names = [], []
    for name, col in zip(names, columns):
        cells = [c.strip() for c in col]
        missing = np.array([c.lower() in MISSING_TOKENS for c in cells])
        numeric = True
        values = np.full(len(cells), np.nan)
        for i, c in enumerate(cells):
            if missing[i]:
                continue
            try:
                values[i] = float(c)
            except ValueError:
                numeric = False
                break
        if not numeric:
            codes: dict = {}
            values = np.full(len(cells), np.nan)
            for i, c in enumerate(cells):
                if not missing[i]:
                    values[i] = codes.setdefault(c, len(codes))
            if options.one_hot:
                filled = values.copy()
                if missing.any():
                    if not options.impute:
                        r = int(np.argmax(missing))
                        raise NonFiniteValue(r + row_offset, name, cells[r])
                    filled[missing] = np.bincount(values[~missing].astype(int)).argmax()
                for cat, code in codes.items():
                    feats.append((filled == code).astype(float))
                    out_names.append(f"{name}={cat}")
                continue
        bad = ~np.isfinite(values)
        if bad.any():
            if not options.impute:
                r = int(np.argmax(bad))
                raise NonFiniteValue(r + row_offset, name, cells[r])
            if bad.all():
                raise NonFiniteValue(row_offset, name, "column entirely missing")
            if numeric:
                values[bad] = values[~bad].mean()
            else:
                values[bad] = np.bincount(values[~bad].astype(int)).argmax()
        feats.append(values)
        out_names.append(name)
    return np.column_stack(feats), out_names


def _split_label(header, body, label_column):
    if label_column not in header:
        raise MissingLabelColumn(f"label column {label_column!r} not in header {header}")
    li = header.index(label_column)
    names = [h for i, h in enumerate(header) if i != li]
    if not names:
        raise ValueError("file has no feature columns")
    columns = [[r[i] for r in body] for i in range(len(header)) if i != li]
    labels = [r[li] for r in body]
    return names, columns, labels


def load_dataset(path, label_column: str, options: IngestOptions | None = None, name=None) -> Dataset:
    """Read a delimited file with a header row into a validated :class:`Dataset`."""
    options = options or IngestOptions()
    path = Path(path)
    header, body = _read_rows(path, options.delimiter)
    names, columns, labels = _split_label(header, body, label_column)
    y = _encode_labels(labels, options.label_map)
    X, names = _encode_columns(names, columns, options)
    return Dataset(X, y, tuple(names), name or path.stem)


def load_train_test(train_path, test_path, label_column, options: IngestOptions | None = None, name=None):
    """Load an explicit train/test file pair.

    Both files are encoded together (categories coded by first appearance,
    train rows first) and the returned plan uses the test file verbatim.
    """
    options = options or IngestOptions()
    h1, b1 = _read_rows(Path(train_path), options.delimiter)
    h2, b2 = _read_rows(Path(test_path), options.delimiter)
    if h1 != h2:
        raise ValueError("train and test headers differ")
    names, columns, labels = _split_label(h1, b1 + b2, label_column)
    y = _encode_labels(labels, options.label_map)
    X, names = _encode_columns(names, columns, options)
    d = Dataset(X, y, tuple(names), name or Path(train_path).stem)
    n1 = len(b1)
    if len(np.unique(y[:n1])) < 2:
        raise DegenerateClass("train file contains a single class")
    plan = SplitPlan(np.arange(n1), np.arange(n1, n1 + len(b2)), seed=0)
    return d, plan


# ---------------------------------------------------------------- splitting

def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def make_split(d: Dataset, test_fraction: float = 0.2, seed: int = 0) -> SplitPlan:
    """Stratified train/test split; each class contributes round(n_c * fraction) test rows."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    rng = np.random.default_rng(derive_seed(seed, "split"))
    test = []
    for c in (0, 1):
        idx = np.flatnonzero(d.labels == c)
        if len(idx) < 2:
            raise DegenerateClass(f"class {c} has {len(idx)} instance(s); need >= 2 to split")
        n_test = min(max(_round_half_up(len(idx) * test_fraction), 1), len(idx) - 1)
        test.append(rng.permutation(idx)[:n_test])
    test = np.sort(np.concatenate(test))
    train = np.setdiff1d(np.arange(d.n), test)
    return SplitPlan(train, test, seed)


def make_folds(labels, k: int = 10, seed: int = 0, strict: bool = True) -> FoldPlan:
    """Stratified fold assignment.

    Classes are permuted independently and dealt round-robin, the second
    class continuing where the first stopped, so per-fold class counts are
    within one of proportional and fold sizes within one of each other.
    ``strict=False`` drops the per-class >= k requirement (small sweep subsets).
    """
    y = np.asarray(labels)
    n = len(y)
    if k < 2 or n < k:
        raise TooFewInstances(f"need k >= 2 and n >= k, got n={n}, k={k}")
    counts = [int((y == c).sum()) for c in (0, 1)]
    if strict and min(counts) < k:
        raise TooFewPerClass(f"class counts {counts} below k={k}")
    rng = np.random.default_rng(derive_seed(seed, "folds", n, k))
    order = np.concatenate([rng.permutation(np.flatnonzero(y == c)) for c in (0, 1)])
    assignments = np.empty(n, dtype=np.int64)
    assignments[order] = np.arange(n) % k
    return FoldPlan(k, assignments)


def make_grid(train_size: int) -> SampleGrid:
    """Powers of two from 16 up to ``train_size``, plus ``train_size`` itself."""
    if train_size < 16:
        raise TrainTooSmall(f"train size {train_size} < 16")
    sizes = []
    s = 16
    while s <= train_size:
        sizes.append(s)
        s *= 2
    if sizes[-1] != train_size:
        sizes.append(train_size)
    return SampleGrid(tuple(sizes))


def _stratified_order(labels, seed):
    """Ordering of positions whose every prefix is (near) class-proportional.

    The first two members of each class lead so small prefixes never lose a
    class; the rest are merged by their within-class quantile.
    """
    rng = np.random.default_rng(derive_seed(seed, "subsample-order"))
    keys, pos = [], []
    for c in (0, 1):
        idx = rng.permutation(np.flatnonzero(labels == c))
        n_c = len(idx)
        key = (np.arange(n_c) + 0.5) / max(n_c, 1)
        key[: min(2, n_c)] = -1.0 + np.arange(min(2, n_c)) * 1e-9
        keys.append(np.column_stack([key, np.full(n_c, c)]))
        pos.append(idx)
    keys = np.vstack(keys)
    pos = np.concatenate(pos)
    return pos[np.lexsort((keys[:, 1], keys[:, 0]))]


def subsample(labels, indices, s: int, seed: int, nested: bool = True) -> np.ndarray:
    """Stratified size-``s`` subset of ``indices`` (sorted ascending).

    With ``nested=True`` the subset is a prefix of one seeded stratified
    ordering, so the subset at ``s`` contains the subset at any smaller size.
    Otherwise an independent stratified draw is made per size.
    """
    indices = np.asarray(indices, dtype=np.int64)
    y = np.asarray(labels)[indices]
    if s > len(indices):
        raise SizeTooLarge(f"requested {s} of {len(indices)} indices")
    if s < 1:
        raise ValueError("size must be >= 1")
    if nested:
        order = _stratified_order(y, seed)
        return np.sort(indices[order[:s]])
    rng = np.random.default_rng(derive_seed(seed, "subsample", s))
    counts = np.array([(y == c).sum() for c in (0, 1)])
    quota = counts * s / len(y)
    take = np.floor(quota).astype(int)
    rem = s - take.sum()
    for c in np.argsort(-(quota - take), kind="stable")[:rem]:
        take[c] += 1
    chosen = [rng.permutation(np.flatnonzero(y == c))[: take[c]] for c in (0, 1)]
    return np.sort(indices[np.concatenate(chosen)])


def standardize_fit(X):
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd < 1e-12] = 1.0
    return mu, sd


def dataset_from_arrays(X, y, feature_names: Sequence[str] | None = None, name="arrays") -> Dataset:
    X = np.asarray(X, dtype=float)
    names = feature_names or [f"x{i}" for i in range(X.shape[1])]
    return Dataset(X, np.asarray(y), tuple(names), name)
