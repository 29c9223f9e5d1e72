"""Labeled frame datasets, the train/validation/test split and stratified k-fold."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .features import FEATURE_NAMES, FeatureMatrix

NOT_CONTACT = 0
CONTACT = 1
CLASS_NAMES = ("not_contact", "contact")
DEFAULT_LABEL_WINDOW = 0.018


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledDataset:
    X: np.ndarray
    y: np.ndarray
    trial_ids: np.ndarray
    timestamps: np.ndarray | None = None
    feature_names: tuple = FEATURE_NAMES

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=np.int64).ravel()
        ids = np.asarray(self.trial_ids).astype(str).ravel()
        if len(X) != len(y) or len(y) != len(ids):
            raise DatasetError("X, y and trial_ids must have equal lengths")
        if X.shape[1] != len(self.feature_names):
            raise DatasetError("feature_names does not match the column count")
        if y.size and not np.isin(y, (NOT_CONTACT, CONTACT)).all():
            raise DatasetError("labels must be 0 (not_contact) or 1 (contact)")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "trial_ids", ids)
        if self.timestamps is not None:
            t = np.asarray(self.timestamps, dtype=float).ravel()
            if len(t) != len(y):
                raise DatasetError("timestamps length mismatch")
            object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def __len__(self) -> int:
        return len(self.y)

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx)
        t = None if self.timestamps is None else self.timestamps[idx]
        return LabeledDataset(self.X[idx], self.y[idx], self.trial_ids[idx], t, self.feature_names)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=2)

    @staticmethod
    def concatenate(parts: Sequence["LabeledDataset"]) -> "LabeledDataset":
        if not parts:
            raise DatasetError("nothing to concatenate")
        stamps = None
        if all(p.timestamps is not None for p in parts):
            stamps = np.concatenate([p.timestamps for p in parts])
        return LabeledDataset(
            np.vstack([p.X for p in parts]),
            np.concatenate([p.y for p in parts]),
            np.concatenate([p.trial_ids for p in parts]),
            stamps,
            parts[0].feature_names,
        )


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.56
    val_frac: float = 0.19
    test_frac: float = 0.25
    seed: int = 0
    mode: str = "frame_level"

    def __post_init__(self):
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if any(f <= 0 for f in fracs):
            raise DatasetError("split fractions must be positive")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise DatasetError(f"split fractions must sum to 1, got {sum(fracs)}")
        if self.mode not in ("frame_level", "trial_level"):
            raise DatasetError(f"unknown split mode {self.mode!r}")

    @property
    def fractions(self) -> tuple[float, float, float]:
        return (self.train_frac, self.val_frac, self.test_frac)


def label_frames(
    fm: FeatureMatrix,
    contact_times: Iterable[float],
    window: float = DEFAULT_LABEL_WINDOW,
    trial_id: str = "trial",
    offset: float = 0.0,
) -> LabeledDataset:
    """Rows within ``±window`` seconds of ``contact_time + offset`` are labeled contact.

    A positive ``offset`` moves the window past the impact onset, so that
    frames recorded entirely before the impact are not labeled contact.
    """
    if not window > 0:
        raise DatasetError("label window must be positive")
    t = fm.timestamps
    y = np.zeros(len(t), dtype=np.int64)
    for tc in contact_times:
        y[np.abs(t - (tc + offset)) <= window] = CONTACT
    return LabeledDataset(fm.values, y, np.full(len(t), trial_id), t, fm.columns)


def _largest_remainder(n: int, fractions: Sequence[float]) -> np.ndarray:
    ideal = n * np.asarray(fractions, dtype=float)
    counts = np.floor(ideal).astype(int)
    short = n - counts.sum()
    # stable: larger remainder first, then earlier split
    order = sorted(range(len(ideal)), key=lambda i: (-(ideal[i] - counts[i]), i))
    for i in order[:short]:
        counts[i] += 1
    return counts


def split(ds: LabeledDataset, spec: SplitSpec = SplitSpec()):
    """Return (train, val, test). Deterministic given ``spec.seed``."""
    if len(ds) == 0:
        raise DatasetError("cannot split an empty dataset")
    rng = np.random.default_rng(spec.seed)
    parts: list[list[np.ndarray]] = [[], [], []]
    if spec.mode == "frame_level":
        for cls in (NOT_CONTACT, CONTACT):
            idx = np.flatnonzero(ds.y == cls)
            idx = idx[rng.permutation(len(idx))]
            bounds = np.cumsum(_largest_remainder(len(idx), spec.fractions))[:-1]
            for s, chunk in enumerate(np.split(idx, bounds)):
                parts[s].append(chunk)
    else:
        trials = np.unique(ds.trial_ids)
        trials = trials[rng.permutation(len(trials))]
        bounds = np.cumsum(_largest_remainder(len(trials), spec.fractions))[:-1]
        for s, group in enumerate(np.split(trials, bounds)):
            parts[s].append(np.flatnonzero(np.isin(ds.trial_ids, group)))
    out = []
    for name, chunks in zip(("train", "val", "test"), parts):
        idx = np.sort(np.concatenate(chunks))
        sub = ds.subset(idx)
        if not np.any(sub.y == CONTACT):
            raise DatasetError(f"degenerate split: {name} split has no contact rows")
        out.append(sub)
    return tuple(out)


def stratified_kfold(ds: LabeledDataset, k: int = 10, seed: int = 0):
    """List of ``k`` (train_idx, test_idx) pairs with per-class balanced test folds."""
    if k < 2:
        raise DatasetError("k must be at least 2")
    counts = ds.class_counts()
    for cls, n in enumerate(counts):
        if n < k:
            raise DatasetError(f"class {CLASS_NAMES[cls]} has {n} rows, fewer than k={k}")
    rng = np.random.default_rng(seed)
    ordered = []
    for cls in (NOT_CONTACT, CONTACT):
        idx = np.flatnonzero(ds.y == cls)
        ordered.append(idx[rng.permutation(len(idx))])
    ordered = np.concatenate(ordered)
    fold_of = np.empty(len(ds), dtype=np.int64)
    # dealing consecutive class blocks round-robin keeps every class within 1 of even
    fold_of[ordered] = np.arange(len(ordered)) % k
    folds = []
    for f in range(k):
        test = np.flatnonzero(fold_of == f)
        train = np.flatnonzero(fold_of != f)
        folds.append((train, test))
    return folds
