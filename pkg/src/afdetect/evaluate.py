"""Hold-out and cross-validation evaluation: confusion matrices,
accuracy/sensitivity/specificity, ROC/AUC, and the end-to-end experiment
protocol (stratified 80/20 split, per-model 10-fold CV on the training
portion, test-set metrics)."""

from dataclasses import dataclass
import json

import numpy as np

from . import classify
from .dataset import Label, split_indices
from .errors import (
    ConfigError,
    LengthMismatchError,
    NumericError,
    SingleClassError,
    TooFewPerClassError,
    UndefinedMetricError,
)


@dataclass
class ConfusionMatrix:
    """2x2 counts with AF as the positive class."""
    tp: int
    fn: int
    fp: int
    tn: int

    @property
    def total(self):
        return self.tp + self.fn + self.fp + self.tn


@dataclass
class Metrics:
    """Fractions in [0, 1]; None where the denominator was zero."""
    accuracy: float | None
    sensitivity: float | None
    specificity: float | None


def _to01(labels):
    out = np.empty(len(labels), dtype=np.uint8)
    for i, v in enumerate(labels):
        if isinstance(v, Label):
            out[i] = 1 if v is Label.AF else 0
        else:
            out[i] = 1 if int(v) else 0
    return out


def confusion_from_predictions(actual, predicted):
    a = _to01(actual)
    p = _to01(predicted)
    if a.shape[0] != p.shape[0]:
        raise LengthMismatchError(
            f"{a.shape[0]} actual vs {p.shape[0]} predicted labels")
    if a.shape[0] == 0:
        raise LengthMismatchError("need at least one label pair")
    return ConfusionMatrix(
        tp=int(np.sum((a == 1) & (p == 1))),
        fn=int(np.sum((a == 1) & (p == 0))),
        fp=int(np.sum((a == 0) & (p == 1))),
        tn=int(np.sum((a == 0) & (p == 0))),
    )


def metrics(cm):
    """Accuracy, sensitivity, specificity; a zero denominator yields None
    for that metric (absent, not zero)."""
    if cm.total == 0:
        raise UndefinedMetricError("empty confusion matrix")
    acc = (cm.tp + cm.tn) / cm.total
    sens = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn > 0 else None
    spec = cm.tn / (cm.tn + cm.fp) if cm.tn + cm.fp > 0 else None
    return Metrics(accuracy=acc, sensitivity=sens, specificity=spec)


def kfold_cv(rows, labels, model_name, params, folds, seed):
    """Stratified k-fold accuracies; per-class round-robin assignment after
    a seeded shuffle, standardizer and model refit per fold."""
    X = np.asarray(rows, dtype=np.float64)
    y = np.asarray(labels, dtype=np.uint8)
    if folds < 2:
        raise ConfigError(f"folds must be >= 2, got {folds}")
    for cls in (1, 0):
        count = int(np.sum(y == cls))
        if count < folds:
            raise TooFewPerClassError(
                f"class {'AF' if cls else 'NAF'} has {count} rows, "
                f"fewer than {folds} folds")
    root = np.random.SeedSequence(seed)
    shuffle_child, *fold_children = root.spawn(folds + 1)
    rng = np.random.default_rng(shuffle_child)
    fold_of = np.empty(y.shape[0], dtype=np.int64)
    for cls in (1, 0):
        idx = np.flatnonzero(y == cls)
        perm = rng.permutation(idx.size)
        fold_of[idx[perm]] = np.arange(idx.size) % folds
    accuracies = np.empty(folds)
    for f in range(folds):
        train = fold_of != f
        test = ~train
        fold_seed = int(fold_children[f].generate_state(1)[0])
        tc = classify.train_model(model_name, params, X[train], y[train],
                                  seed=fold_seed)
        pred = classify.predict_labels(tc, X[test])
        accuracies[f] = float(np.mean(pred == y[test]))
    return accuracies


def roc_auc(scores, labels):
    """ROC points (FPR, TPR) from a descending threshold sweep over the
    unique scores (ties grouped), plus the trapezoidal AUC."""
    s = np.asarray(scores, dtype=np.float64)
    y = _to01(labels)
    if s.shape[0] != y.shape[0]:
        raise LengthMismatchError(f"{s.shape[0]} scores vs {y.shape[0]} labels")
    if not np.isfinite(s).all():
        raise NumericError("scores must be finite")
    n_pos = int(y.sum())
    n_neg = y.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("ROC needs both classes")
    order = np.argsort(-s, kind="stable")
    ys = y[order]
    ss = s[order]
    group_ends = np.append(np.flatnonzero(np.diff(ss)), ss.shape[0] - 1)
    ctp = np.cumsum(ys)
    cfp = np.cumsum(1 - ys.astype(np.int64))
    tpr = ctp[group_ends] / n_pos
    fpr = cfp[group_ends] / n_neg
    points = np.vstack([[0.0, 0.0], np.column_stack([fpr, tpr])])
    auc = float(np.trapezoid(points[:, 1], points[:, 0]))
    return points, auc


@dataclass
class EvaluationReport:
    model_name: str
    accuracy: float | None
    sensitivity: float | None
    specificity: float | None
    auc: float
    confusion: ConfusionMatrix
    cv_fold_accuracies: np.ndarray
    roc_points: np.ndarray
    seed: int
    config_hash: str


def run_experiment(table, model_configs, seed, test_fraction=0.2, cv_folds=10,
                   config_hash=""):
    """Full protocol on an extracted feature table.

    model_configs is an ordered list of (name, params) pairs. Per model,
    CV accuracies come from the training portion only; headline metrics and
    ROC come from the held-out test rows. Deterministic for a fixed seed.
    """
    X = table.values
    y = table.labels
    train_idx, test_idx = split_indices(y, test_fraction, seed)
    root = np.random.SeedSequence(seed)
    children = root.spawn(2 * len(model_configs))
    reports = []
    for i, (name, params) in enumerate(model_configs):
        cv_seed = int(children[2 * i].generate_state(1)[0])
        fit_seed = int(children[2 * i + 1].generate_state(1)[0])
        folds = kfold_cv(X[train_idx], y[train_idx], name, params,
                         cv_folds, cv_seed)
        tc = classify.train_model(name, params, X[train_idx], y[train_idx],
                                  seed=fit_seed)
        scores = classify.decision_scores(tc, X[test_idx])
        pred = classify.predict_labels(tc, X[test_idx])
        cm = confusion_from_predictions(y[test_idx], pred)
        m = metrics(cm)
        points, auc = roc_auc(scores, y[test_idx])
        reports.append(EvaluationReport(
            model_name=name,
            accuracy=m.accuracy,
            sensitivity=m.sensitivity,
            specificity=m.specificity,
            auc=auc,
            confusion=cm,
            cv_fold_accuracies=folds,
            roc_points=points,
            seed=int(seed),
            config_hash=config_hash,
        ))
    return reports


# -- report rendering ------------------------------------------------------------

def report_to_dict(r):
    return {
        "model": r.model_name,
        "accuracy": r.accuracy,
        "sensitivity": r.sensitivity,
        "specificity": r.specificity,
        "auc": r.auc,
        "confusion": {"tp": r.confusion.tp, "fn": r.confusion.fn,
                      "fp": r.confusion.fp, "tn": r.confusion.tn},
        "cv_fold_accuracies": list(map(float, r.cv_fold_accuracies)),
        "roc_points": [[float(a), float(b)] for a, b in r.roc_points],
    }


def reports_to_json(reports, seed, config_hash):
    doc = {
        "format": "afdetect-report",
        "version": 1,
        "seed": int(seed),
        "config_hash": config_hash,
        "models": [report_to_dict(r) for r in reports],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def _pct(v):
    return "n/a" if v is None else f"{100.0 * v:.2f}%"


def render_table(reports, seed, config_hash):
    lines = [
        f"# config_hash={config_hash} seed={seed}",
        f"{'model':<16}{'accuracy':>10}{'sensitivity':>13}{'specificity':>13}"
        f"{'auc':>8}{'cv_mean':>9}",
    ]
    for r in reports:
        cv_mean = float(np.mean(r.cv_fold_accuracies))
        lines.append(
            f"{r.model_name:<16}{_pct(r.accuracy):>10}{_pct(r.sensitivity):>13}"
            f"{_pct(r.specificity):>13}{r.auc:>8.4f}{_pct(cv_mean):>9}")
    return "\n".join(lines) + "\n"
