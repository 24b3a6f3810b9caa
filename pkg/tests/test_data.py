import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rashomon_audit.data import (
    IngestOptions, dataset_from_arrays, load_dataset, load_train_test, make_folds, make_grid, make_split,
    subsample,
)
from rashomon_audit.errors import (
    DegenerateClass, EmptyFile, MissingLabelColumn, NonBinaryLabel, NonFiniteValue, TooFewInstances,
    TooFewPerClass, TrainTooSmall, SizeTooLarge,
)


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_two_row_file(tmp_path):
    d = load_dataset(write(tmp_path, "a,b,y\n1,2,0\n3,4,1\n"), "y")
    assert d.n == 2 and d.k == 2
    assert d.feature_names == ("a", "b")


def test_label_mapping(tmp_path):
    p = write(tmp_path, "a,y\n1,yes\n2,no\n3,yes\n")
    d = load_dataset(p, "y", IngestOptions(label_map={"yes": 1, "no": 0}))
    assert d.labels.tolist() == [1, 0, 1]


def test_ingest_errors(tmp_path):
    with pytest.raises(EmptyFile):
        load_dataset(write(tmp_path, ""), "y")
    with pytest.raises(MissingLabelColumn):
        load_dataset(write(tmp_path, "a,b\n1,2\n"), "y")
    with pytest.raises(NonBinaryLabel):
        load_dataset(write(tmp_path, "a,y\n1,0\n2,1\n3,2\n"), "y")
    with pytest.raises(NonBinaryLabel):
        load_dataset(write(tmp_path, "a,y\n1,1\n2,1\n"), "y")
    with pytest.raises(NonFiniteValue):
        load_dataset(write(tmp_path, "a,y\n1,0\nnan,1\n"), "y")


def test_impute_and_categorical(tmp_path):
    p = write(tmp_path, "a,c,y\n1,red,0\n,blue,1\n3,red,1\n")
    d = load_dataset(p, "y", IngestOptions(impute=True))
    assert d.features[1, 0] == pytest.approx(2.0)
    assert d.features[:, 1].tolist() == [0.0, 1.0, 0.0]  # codes by first appearance
    oh = load_dataset(p, "y", IngestOptions(impute=True, one_hot=True))
    assert oh.k == 3


def test_train_test_files(tmp_path):
    tr = write(tmp_path, "a,y\n1,0\n2,1\n3,0\n", "tr.csv")
    te = write(tmp_path, "a,y\n4,1\n5,0\n", "te.csv")
    d, plan = load_train_test(tr, te, "y")
    assert d.n == 5
    assert plan.train_indices.tolist() == [0, 1, 2] and plan.test_indices.tolist() == [3, 4]


def test_split_balanced():
    X = np.arange(200.0).reshape(100, 2)
    y = np.array([0, 1] * 50)
    d = dataset_from_arrays(X, y)
    a = make_split(d, 0.2, seed=7)
    b = make_split(d, 0.2, seed=7)
    assert len(a.train_indices) == 80 and len(a.test_indices) == 20
    assert y[a.test_indices].sum() == 10
    assert np.array_equal(a.test_indices, b.test_indices)
    assert not set(a.train_indices) & set(a.test_indices)


def test_split_degenerate():
    d = dataset_from_arrays(np.zeros((3, 1)) + np.arange(3)[:, None], [0, 0, 1])
    with pytest.raises(DegenerateClass):
        make_split(d, 0.5, seed=0)


def test_folds_exact_stratification():
    y = np.array([0] * 10 + [1] * 10)
    f = make_folds(y, 10, seed=3)
    for i in range(10):
        sel = f.assignments == i
        assert y[sel].sum() == 1 and (1 - y[sel]).sum() == 1


def test_folds_errors_and_determinism():
    y = np.r_[np.zeros(400), np.ones(368)].astype(int)
    assert np.array_equal(make_folds(y, 10, 1).assignments, make_folds(y, 10, 1).assignments)
    with pytest.raises(TooFewInstances):
        make_folds(np.array([0, 1] * 4 + [0]), 10, 0)
    with pytest.raises(TooFewPerClass):
        make_folds(np.array([0] * 15 + [1] * 5), 10, 0)
    make_folds(np.array([0] * 15 + [1] * 5), 10, 0, strict=False)


@settings(max_examples=60, deadline=None)
@given(n0=st.integers(2, 80), n1=st.integers(2, 80), k=st.integers(2, 10), seed=st.integers(0, 10**6))
def test_fold_stratification_bound(n0, n1, k, seed):
    y = np.r_[np.zeros(n0), np.ones(n1)].astype(int)
    if n0 + n1 < k:
        return
    f = make_folds(y, k, seed, strict=False)
    sizes = np.bincount(f.assignments, minlength=k)
    assert sizes.max() - sizes.min() <= 1 and sizes.min() > 0
    for c, n_c in ((0, n0), (1, n1)):
        per = np.bincount(f.assignments[y == c], minlength=k)
        assert np.all(np.abs(per - n_c / k) < 1 + 1e-9)


def test_grid():
    assert make_grid(768).sizes == (16, 32, 64, 128, 256, 512, 768)
    assert make_grid(16).sizes == (16,)
    assert make_grid(100).sizes == (16, 32, 64, 100)
    with pytest.raises(TrainTooSmall):
        make_grid(15)


@given(st.integers(16, 100_000))
def test_grid_property(n):
    s = make_grid(n).sizes
    assert s[0] == 16 and s[-1] == n
    assert all(b > a and b <= 2 * a for a, b in zip(s, s[1:]))


def test_subsample_examples():
    y = np.array([0, 1] * 50)
    idx = np.arange(100) + 1000
    labels = np.zeros(1100, int)
    labels[idx] = y
    full = subsample(labels, idx, 100, seed=1)
    assert np.array_equal(full, idx)
    s16 = subsample(labels, idx, 16, seed=1)
    assert labels[s16].sum() == 8
    assert set(s16) <= set(subsample(labels, idx, 32, seed=1))
    with pytest.raises(SizeTooLarge):
        subsample(labels, idx, 101, seed=1)


@settings(max_examples=40, deadline=None)
@given(n0=st.integers(2, 200), n1=st.integers(2, 200), seed=st.integers(0, 2**32))
def test_subsample_nested_keeps_both_classes(n0, n1, seed):
    y = np.r_[np.zeros(n0), np.ones(n1)].astype(int)
    idx = np.arange(len(y))
    prev = set()
    for s in make_grid(len(y)).sizes if len(y) >= 16 else (len(y),):
        cur = subsample(y, idx, s, seed)
        assert prev <= set(cur)
        assert set(y[cur]) == {0, 1}
        prev = set(cur)


def test_independent_draws_are_stratified():
    y = np.r_[np.zeros(70), np.ones(30)].astype(int)
    sub = subsample(y, np.arange(100), 20, seed=4, nested=False)
    assert y[sub].sum() == 6
