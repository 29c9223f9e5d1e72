"""Random forest of CART trees grown with Gini impurity.

Bootstrap resamples are represented as integer sample weights (the number of
times each row was drawn), which is equivalent to fitting on the duplicated
rows. Each tree gets its own seed spawned from the forest seed, so tree ``i``
does not depend on how many trees are grown in total.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

MODEL_FORMAT = "mmcontact-random-forest"
MODEL_VERSION = 1
LEAF = -1


class ForestError(ValueError):
    pass


@dataclass(frozen=True)
class ForestConfig:
    n_estimators: int = 8
    max_features: object = "sqrt"
    min_samples_split: int = 2
    max_depth: int | None = None
    seed: int = 0
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ForestError("n_estimators must be >= 1")
        if self.min_samples_split < 2:
            raise ForestError("min_samples_split must be >= 2")
        if self.max_depth is not None and self.max_depth < 1:
            raise ForestError("max_depth must be >= 1 or None")
        if isinstance(self.max_features, int) and self.max_features < 1:
            raise ForestError("max_features must yield at least one feature")

    def n_candidate_features(self, n_features: int) -> int:
        mf = self.max_features
        if mf is None or mf == "all":
            return n_features
        if mf == "sqrt":
            return max(1, int(math.floor(math.sqrt(n_features))))
        if mf == "log2":
            return max(1, int(math.floor(math.log2(n_features))))
        if isinstance(mf, (int, np.integer)):
            return int(min(mf, n_features))
        raise ForestError(f"unsupported max_features {mf!r}")

    def with_(self, **changes) -> "ForestConfig":
        return ForestConfig(**{**asdict(self), **changes})


@dataclass
class Tree:
    """Flat array form of one fitted tree; node 0 is the root.

    ``value`` holds per-class (bootstrap-weighted) sample counts at every node.
    A sample goes left iff ``x[feature] <= threshold``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    impurity: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def weighted_n(self) -> np.ndarray:
        return self.value.sum(axis=1)

    def is_leaf(self, node: int) -> bool:
        return self.left[node] == LEAF

    def depth(self) -> int:
        best, stack = 0, [(0, 0)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            if not self.is_leaf(node):
                stack += [(self.left[node], d + 1), (self.right[node], d + 1)]
        return best

    def node(self, index: int = 0) -> dict:
        """Nested dict view of the subtree rooted at ``index``."""
        if self.is_leaf(index):
            return {"class_counts": self.value[index].astype(int).tolist()}
        return {
            "feature_index": int(self.feature[index]),
            "threshold": float(self.threshold[index]),
            "left": self.node(int(self.left[index])),
            "right": self.node(int(self.right[index])),
        }

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        nodes = np.zeros(len(X), dtype=np.int64)
        active = np.flatnonzero(self.left[nodes] != LEAF)
        while active.size:
            cur = nodes[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            nodes[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.left[nodes[active]] != LEAF]
        return nodes

    def importances(self, n_features: int) -> np.ndarray:
        """Weighted Gini decrease per feature, as a fraction of root weight."""
        out = np.zeros(n_features)
        wn = self.weighted_n
        for node in np.flatnonzero(self.left != LEAF):
            l, r = self.left[node], self.right[node]
            gain = wn[node] * self.impurity[node] - wn[l] * self.impurity[l] - wn[r] * self.impurity[r]
            out[self.feature[node]] += gain
        return out / wn[0]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.astype(np.int64).tolist(),
            "impurity": self.impurity.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=float),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["value"], dtype=float).reshape(len(d["feature"]), -1),
            np.asarray(d["impurity"], dtype=float),
        )


def gini(counts) -> float:
    counts = np.asarray(counts, dtype=float)
    n = counts.sum()
    if n <= 0:
        return 0.0
    return float(1.0 - np.sum((counts / n) ** 2))


def _best_split_on(xs, ys_onehot_w, total_counts, tol):
    """Best midpoint split along one presorted feature.

    Returns (children_score, position, threshold) or None. ``children_score``
    is the weighted Gini of the children times the node weight.
    """
    valid = xs[:-1] < xs[1:]
    if not valid.any():
        return None
    cum = np.cumsum(ys_onehot_w, axis=0)[:-1]
    n_left = cum.sum(axis=1)
    n_total = total_counts.sum()
    n_right = n_total - n_left
    right = total_counts - cum
    with np.errstate(divide="ignore", invalid="ignore"):
        score = (n_left - (cum**2).sum(axis=1) / n_left) + (n_right - (right**2).sum(axis=1) / n_right)
    score = np.where(valid, score, np.inf)
    best = score.min()
    pos = int(np.flatnonzero(score <= best + tol)[0])
    lo, hi = xs[pos], xs[pos + 1]
    thr = lo / 2.0 + hi / 2.0
    if not lo <= thr < hi:
        thr = lo
    return float(score[pos]), pos, float(thr)


def build_tree(X, y, weights, n_classes, cfg: ForestConfig, rng: np.random.Generator) -> Tree:
    """Grow one CART tree on rows with positive weight."""
    n_features = X.shape[1]
    n_candidates = cfg.n_candidate_features(n_features)
    rows = np.flatnonzero(weights > 0)
    w = weights.astype(float)
    onehot = np.zeros((len(X), n_classes))
    onehot[rows, y[rows]] = w[rows]
    orders = [rows[np.argsort(X[rows, f], kind="stable")] for f in range(n_features)]
    go_left = np.zeros(len(X), dtype=bool)

    feature, threshold, left, right, value, impurity = [], [], [], [], [], []

    def new_node(counts):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(counts)
        impurity.append(gini(counts))
        return len(feature) - 1

    root_counts = onehot[rows].sum(axis=0)
    stack = [(new_node(root_counts), orders, 0)]
    while stack:
        node, node_orders, depth = stack.pop()
        counts = value[node]
        n_node = counts.sum()
        if (
            np.count_nonzero(counts) <= 1
            or n_node < cfg.min_samples_split
            or (cfg.max_depth is not None and depth >= cfg.max_depth)
        ):
            continue
        tol = 1e-12 * max(1.0, n_node)
        parent_score = n_node * impurity[node]
        best = None
        visited = 0
        for f in rng.permutation(n_features):
            if visited >= n_candidates:
                break
            order = node_orders[f]
            xs = X[order, f]
            if xs[0] == xs[-1]:
                continue  # constant here: does not count toward max_features
            visited += 1
            found = _best_split_on(xs, onehot[order], counts, tol)
            if found is None:
                continue
            score, pos, thr = found
            if (
                best is None
                or score < best[0] - tol
                or (score <= best[0] + tol and (f, thr) < (best[1], best[3]))
            ):
                best = (score, int(f), pos, thr)
        if best is None or not best[0] < parent_score - tol:
            continue
        _, f, pos, thr = best
        order = node_orders[f]
        left_rows = order[: pos + 1]
        go_left[left_rows] = True
        left_orders, right_orders = [], []
        for o in node_orders:
            m = go_left[o]
            left_orders.append(o[m])
            right_orders.append(o[~m])
        go_left[left_rows] = False
        l_node = new_node(onehot[left_rows].sum(axis=0))
        r_node = new_node(counts - value[l_node])
        feature[node], threshold[node] = f, thr
        left[node], right[node] = l_node, r_node
        stack.append((r_node, right_orders, depth + 1))
        stack.append((l_node, left_orders, depth + 1))

    return Tree(
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold, dtype=float),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(value, dtype=float).reshape(-1, n_classes),
        np.asarray(impurity, dtype=float),
    )


def tree_seeds(seed: int, n: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(n)


@dataclass
class RandomForestModel:
    trees: list
    config: ForestConfig
    feature_names: tuple
    classes: tuple = (0, 1)
    class_names: tuple = ("not_contact", "contact")
    feature_importances: np.ndarray = field(default=None)

    def __post_init__(self):
        self.feature_names = tuple(self.feature_names)
        self.classes = tuple(int(c) for c in self.classes)
        self.class_names = tuple(self.class_names)
        if self.feature_importances is None:
            self.feature_importances = forest_importances(self.trees, len(self.feature_names))
        self.feature_importances = np.asarray(self.feature_importances, dtype=float)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def truncated(self, n_estimators: int) -> "RandomForestModel":
        """The model that training with ``n_estimators`` trees and the same seed yields."""
        if not 1 <= n_estimators <= len(self.trees):
            raise ForestError("cannot truncate beyond the trained tree count")
        return RandomForestModel(
            self.trees[:n_estimators],
            self.config.with_(n_estimators=n_estimators),
            self.feature_names,
            self.classes,
            self.class_names,
        )

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "config": asdict(self.config),
            "feature_names": list(self.feature_names),
            "classes": list(self.classes),
            "class_names": list(self.class_names),
            "feature_importances": self.feature_importances.tolist(),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RandomForestModel":
        if d.get("format") != MODEL_FORMAT:
            raise ForestError("not a random forest model file")
        if d.get("version") != MODEL_VERSION:
            raise ForestError(f"unsupported model version {d.get('version')}")
        return cls(
            [Tree.from_dict(t) for t in d["trees"]],
            ForestConfig(**d["config"]),
            d["feature_names"],
            d["classes"],
            d["class_names"],
            d["feature_importances"],
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "RandomForestModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def forest_importances(trees: Sequence[Tree], n_features: int) -> np.ndarray:
    if not trees:
        return np.zeros(n_features)
    mean = np.mean([t.importances(n_features) for t in trees], axis=0)
    total = mean.sum()
    return mean / total if total > 0 else np.zeros(n_features)


def train(ds, cfg: ForestConfig = ForestConfig()) -> RandomForestModel:
    """Fit a forest on a ``LabeledDataset`` (or any object with X, y, feature_names)."""
    X = np.ascontiguousarray(ds.X, dtype=float)
    y = np.asarray(ds.y, dtype=np.int64)
    if len(y) < 2:
        raise ForestError("need at least 2 rows to train")
    if len(np.unique(y)) < 2:
        raise ForestError("training data contains a single class")
    n_classes = 2
    trees = []
    for ss in tree_seeds(cfg.seed, cfg.n_estimators):
        rng = np.random.default_rng(ss)
        if cfg.bootstrap:
            weights = np.bincount(rng.integers(0, len(y), len(y)), minlength=len(y))
        else:
            weights = np.ones(len(y), dtype=np.int64)
        trees.append(build_tree(X, y, weights, n_classes, cfg, rng))
    names = getattr(ds, "feature_names", tuple(f"x{i}" for i in range(X.shape[1])))
    return RandomForestModel(trees, cfg, names)


def _as_rows(m: RandomForestModel, rows) -> np.ndarray:
    X = np.asarray(rows, dtype=float)
    if X.ndim == 1:
        X = X[np.newaxis, :]
    if X.shape[1] != m.n_features:
        raise ForestError(f"expected {m.n_features} features, got {X.shape[1]}")
    return X


def predict_proba(m: RandomForestModel, rows) -> np.ndarray:
    """Mean over trees of leaf class proportions; shape ``(n_rows, n_classes)``."""
    X = _as_rows(m, rows)
    out = np.zeros((len(X), len(m.classes)))
    for t in m.trees:
        leaf_counts = t.value[t.apply(X)]
        out += leaf_counts / leaf_counts.sum(axis=1, keepdims=True)
    return out / len(m.trees)


def predict(m: RandomForestModel, rows) -> np.ndarray:
    """Argmax class; exact ties go to the first class (not_contact)."""
    proba = predict_proba(m, rows)
    return np.asarray(m.classes)[np.argmax(proba, axis=1)]


def feature_importance(m: RandomForestModel) -> np.ndarray:
    return m.feature_importances.copy()
