"""Confusion matrix, per-class report, ROC/AUC, cross-validation and the tree-count sweep."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import forest as rf
from .dataset import CLASS_NAMES, CONTACT, LabeledDataset, stratified_kfold


class EvaluationError(ValueError):
    pass


def confusion_matrix(y_true, y_pred, n_classes: int = 2) -> np.ndarray:
    """Rows are true classes, columns predicted classes."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise EvaluationError("y_true and y_pred lengths differ")
    if y_true.size and (y_true.min() < 0 or y_pred.min() < 0 or max(y_true.max(), y_pred.max()) >= n_classes):
        raise EvaluationError("labels must lie in 0..n_classes-1")
    return np.bincount(y_true * n_classes + y_pred, minlength=n_classes**2).reshape(n_classes, n_classes)


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int
    undefined: tuple = ()


def _safe_div(num, den):
    return (num / den, False) if den > 0 else (0.0, True)


def classification_report(confusion, class_names=CLASS_NAMES) -> dict:
    """Per-class precision/recall/F1/support plus the support-weighted average.

    Zero denominators yield 0 and are listed in ``undefined``.
    """
    cm = np.asarray(confusion, dtype=np.int64)
    report = {}
    for i, name in enumerate(class_names):
        tp = cm[i, i]
        p, p_bad = _safe_div(tp, cm[:, i].sum())
        r, r_bad = _safe_div(tp, cm[i, :].sum())
        f, f_bad = _safe_div(2 * p * r, p + r)
        flags = tuple(n for n, bad in (("precision", p_bad), ("recall", r_bad), ("f1", f_bad)) if bad)
        report[name] = ClassMetrics(float(p), float(r), float(f), int(cm[i, :].sum()), flags)
    supports = np.array([report[n].support for n in class_names], dtype=float)
    total = supports.sum()
    weights = supports / total if total > 0 else np.zeros_like(supports)

    def avg(attr):
        return float(sum(w * getattr(report[n], attr) for w, n in zip(weights, class_names)))

    report["weighted_avg"] = ClassMetrics(avg("precision"), avg("recall"), avg("f1"), int(total))
    return report


def roc_curve(y_true, scores) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(fpr, tpr, thresholds) over all distinct score thresholds, starting at (0, 0)."""
    y = np.asarray(y_true).astype(bool)
    s = np.asarray(scores, dtype=float)
    if y.shape != s.shape:
        raise EvaluationError("y_true and scores lengths differ")
    n_pos, n_neg = int(y.sum()), int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise EvaluationError("ROC needs both classes in y_true")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    last_of_run = np.r_[np.flatnonzero(np.diff(s) != 0), len(s) - 1]
    tp = np.cumsum(y)[last_of_run]
    fp = (last_of_run + 1) - tp
    fpr = np.r_[0.0, fp / n_neg]
    tpr = np.r_[0.0, tp / n_pos]
    thresholds = np.r_[np.inf, s[last_of_run]]
    return fpr, tpr, thresholds


def auc_trapezoid(fpr, tpr) -> float:
    fpr, tpr = np.asarray(fpr, dtype=float), np.asarray(tpr, dtype=float)
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def auc_rank(y_true, scores) -> float:
    """P(score_pos > score_neg) + 0.5 * P(tie), via mid-ranks."""
    y = np.asarray(y_true).astype(bool)
    s = np.asarray(scores, dtype=float)
    n_pos, n_neg = int(y.sum()), int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise EvaluationError("AUC needs both classes in y_true")
    order = np.argsort(s, kind="stable")
    sorted_s = s[order]
    ranks = np.empty(len(s))
    # mid-rank for each run of tied scores
    starts = np.r_[0, np.flatnonzero(np.diff(sorted_s) != 0) + 1]
    ends = np.r_[starts[1:], len(s)]
    mid = (starts + ends + 1) / 2.0
    ranks[order] = np.repeat(mid, ends - starts)
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_auc(y_true, scores):
    """ROC points and trapezoidal AUC. Positive class is contact (label 1)."""
    fpr, tpr, _ = roc_curve(y_true, scores)
    return np.column_stack([fpr, tpr]), auc_trapezoid(fpr, tpr)


def accuracy(y_true, y_pred) -> float:
    cm = confusion_matrix(y_true, y_pred)
    return float(np.trace(cm) / cm.sum()) if cm.sum() else 0.0


@dataclass
class EvaluationReport:
    confusion: np.ndarray
    report: dict
    accuracy: float
    roc_points: np.ndarray
    auc: float
    cv_scores: list = field(default_factory=list)
    cv_mean: float | None = None
    cv_std: float | None = None

    @property
    def contact(self) -> ClassMetrics:
        return self.report["contact"]


def evaluate(model: rf.RandomForestModel, ds: LabeledDataset) -> EvaluationReport:
    proba = rf.predict_proba(model, ds.X)
    pred = np.asarray(model.classes)[np.argmax(proba, axis=1)]
    cm = confusion_matrix(ds.y, pred)
    points, auc = roc_auc(ds.y == CONTACT, proba[:, model.classes.index(CONTACT)])
    return EvaluationReport(cm, classification_report(cm), float(np.trace(cm) / cm.sum()), points, auc)


@dataclass
class CrossValidationResult:
    scores: list
    mean: float
    std: float


def cross_validate(ds: LabeledDataset, cfg: rf.ForestConfig, k: int = 10, seed: int = 0) -> CrossValidationResult:
    """Per-fold accuracy of models trained on the other k-1 folds; population SD."""
    scores = []
    for train_idx, test_idx in stratified_kfold(ds, k, seed):
        model = rf.train(ds.subset(train_idx), cfg)
        scores.append(accuracy(ds.y[test_idx], rf.predict(model, ds.X[test_idx])))
    arr = np.asarray(scores)
    return CrossValidationResult(scores, float(arr.mean()), float(arr.std(ddof=0)))


@dataclass
class SweepRow:
    n_estimators: int
    accuracy: float
    auc: float


@dataclass
class SweepResult:
    rows: list
    selected: int
    model: rf.RandomForestModel  # the selected model


def select_by_auc(rows) -> int:
    """Tree count with the highest AUC; ties go to the smaller count."""
    if not rows:
        raise EvaluationError("empty sweep table")
    return min(rows, key=lambda r: (-r.auc, r.n_estimators)).n_estimators


def sweep_n_estimators(
    train_ds: LabeledDataset,
    val_ds: LabeledDataset,
    n_range=range(1, 11),
    cfg: rf.ForestConfig = rf.ForestConfig(),
) -> SweepResult:
    """Score one model per tree count on validation data; pick the best AUC.

    Ties go to the smaller tree count. The n-tree model is the prefix of the
    largest one because per-tree seeds do not depend on the total.
    """
    ns = sorted(set(int(n) for n in n_range))
    if not ns or ns[0] < 1:
        raise EvaluationError("n_range must contain positive tree counts")
    full = rf.train(train_ds, cfg.with_(n_estimators=ns[-1]))
    rows = [SweepRow(n, *_val_scores(full.truncated(n), val_ds)) for n in ns]
    selected = select_by_auc(rows)
    return SweepResult(rows, selected, full.truncated(selected))


def _val_scores(model, ds) -> tuple[float, float]:
    ev = evaluate(model, ds)
    return ev.accuracy, ev.auc
