import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmcontact.dataset import (
    CONTACT,
    DatasetError,
    LabeledDataset,
    SplitSpec,
    label_frames,
    split,
    stratified_kfold,
)
from mmcontact.features import FeatureMatrix

HOP = 160 / 44100


def _features(n=5510):
    t = (np.arange(n) * 160 + 256) / 44100
    return FeatureMatrix(t, np.zeros((n, 7)))


def _dataset(n_neg, n_pos, n_trials=1):
    y = np.r_[np.zeros(n_neg, int), np.ones(n_pos, int)]
    X = np.column_stack([np.arange(len(y), dtype=float)] * 7)
    ids = np.arange(len(y)) % n_trials
    return LabeledDataset(X, y, ids, np.arange(len(y)) * HOP)


def test_no_contacts_means_no_contact_rows():
    assert label_frames(_features(), []).y.sum() == 0


def test_window_counts_match_direct_count():
    fm = _features()
    ds = label_frames(fm, [5.0], 0.018, "t1")
    expected = sum(1 for t in fm.timestamps if abs(t - 5.0) <= 0.018)
    assert ds.y.sum() == expected
    assert 9 <= expected <= 11  # about 2 * 18 ms / 3.63 ms
    assert set(ds.trial_ids) == {"t1"}
    np.testing.assert_array_equal(ds.timestamps, fm.timestamps)


def test_offset_shifts_window():
    fm = _features()
    ds = label_frames(fm, [5.0], 0.018, offset=0.013)
    hit = fm.timestamps[ds.y == CONTACT]
    assert hit.min() >= 5.0 - 0.005 - 1e-12 and hit.max() <= 5.031 + 1e-12


def test_window_must_be_positive():
    with pytest.raises(DatasetError):
        label_frames(_features(10), [0.0], 0.0)


@given(st.lists(st.floats(0, 20), max_size=5), st.floats(1e-4, 0.1), st.floats(1e-4, 0.1))
@settings(max_examples=50)
def test_contact_count_monotone_in_window(contacts, w1, w2):
    fm = _features()
    lo, hi = sorted((w1, w2))
    assert label_frames(fm, contacts, lo).y.sum() <= label_frames(fm, contacts, hi).y.sum()


def test_split_sizes_1000_rows():
    train, val, test = split(_dataset(990, 10), SplitSpec(seed=0))
    assert (len(train), len(val), len(test)) == (560, 190, 250)
    counts = (train.y.sum(), val.y.sum(), test.y.sum())
    assert counts in {(6, 2, 2), (5, 2, 3)}


def test_split_fractions_must_sum_to_one():
    with pytest.raises(DatasetError):
        SplitSpec(0.5, 0.2, 0.2)
    with pytest.raises(DatasetError):
        SplitSpec(1.2, -0.1, -0.1)
    with pytest.raises(DatasetError):
        SplitSpec(mode="per_robot")


def test_split_is_deterministic():
    ds = _dataset(500, 20)
    a = split(ds, SplitSpec(seed=5))
    b = split(ds, SplitSpec(seed=5))
    c = split(ds, SplitSpec(seed=6))
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.X, y.X)
    assert not np.array_equal(a[0].X, c[0].X)


@given(st.integers(20, 400), st.integers(5, 40), st.integers(0, 1000))
@settings(max_examples=40)
def test_split_partitions_rows_and_keeps_ratio(n_neg, n_pos, seed):
    ds = _dataset(n_neg, n_pos)
    parts = split(ds, SplitSpec(seed=seed))
    keys = np.concatenate([p.X[:, 0] for p in parts])
    assert sorted(keys.tolist()) == ds.X[:, 0].tolist()
    for p, frac in zip(parts, (0.56, 0.19, 0.25)):
        for cls, total in ((0, n_neg), (1, n_pos)):
            assert abs(np.sum(p.y == cls) - frac * total) <= 1


def test_degenerate_split_raises():
    with pytest.raises(DatasetError, match="degenerate split"):
        split(_dataset(100, 2), SplitSpec())


def test_trial_level_split_keeps_trials_whole():
    ds = _dataset(1000, 200, n_trials=20)
    parts = split(ds, SplitSpec(mode="trial_level", seed=1))
    groups = [set(p.trial_ids) for p in parts]
    assert [len(g) for g in groups] == [11, 4, 5]
    assert not (groups[0] & groups[1] or groups[0] & groups[2] or groups[1] & groups[2])
    assert sum(len(p) for p in parts) == len(ds)


def test_kfold_exact_divisibility():
    folds = stratified_kfold(_dataset(90, 10), 10, seed=0)
    assert len(folds) == 10
    ds = _dataset(90, 10)
    for train, test in folds:
        assert np.sum(ds.y[test] == 0) == 9 and np.sum(ds.y[test] == 1) == 1
        assert len(np.intersect1d(train, test)) == 0 and len(train) + len(test) == 100


def test_kfold_pigeonhole():
    ds = _dataset(95, 12)
    per_fold = [ds.y[test].sum() for _, test in stratified_kfold(ds, 10, seed=4)]
    assert set(per_fold) <= {1, 2} and sum(per_fold) == 12


@given(st.integers(10, 200), st.integers(10, 60), st.integers(2, 10), st.integers(0, 99))
@settings(max_examples=40)
def test_kfold_test_folds_form_permutation(n_neg, n_pos, k, seed):
    ds = _dataset(n_neg, n_pos)
    folds = stratified_kfold(ds, k, seed)
    tests = np.concatenate([t for _, t in folds])
    assert sorted(tests.tolist()) == list(range(len(ds)))
    for cls, total in ((0, n_neg), (1, n_pos)):
        counts = [np.sum(ds.y[t] == cls) for _, t in folds]
        assert max(counts) - min(counts) <= 1 and abs(counts[0] - total / k) <= 1


def test_kfold_needs_k_rows_per_class():
    with pytest.raises(DatasetError):
        stratified_kfold(_dataset(90, 9), 10)
    with pytest.raises(DatasetError):
        stratified_kfold(_dataset(90, 10), 1)


def test_dataset_validation():
    with pytest.raises(DatasetError):
        LabeledDataset(np.zeros((3, 7)), [0, 1], ["a", "b", "c"])
    with pytest.raises(DatasetError):
        LabeledDataset(np.zeros((2, 7)), [0, 2], ["a", "b"])
