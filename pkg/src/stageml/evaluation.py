"""Confusion matrices, weighted metrics, k-fold splitting and grid search."""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .classifiers import ClassifierSpec, fit_many, predict
from .errors import (DataValidationError, HyperparameterError, ShapeMismatchError,
                     SingleClassError, StratificationError)

CLASS_NAMES = ("Early", "Late")
METRICS = ("precision", "recall", "f1")


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """``counts[actual, predicted]`` over (Early, Late)."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64)
        if c.shape != (2, 2) or np.any(c < 0):
            raise DataValidationError("confusion counts must be a non-negative 2x2 array")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def total(self):
        return int(self.counts.sum())

    def __eq__(self, other):
        return isinstance(other, ConfusionMatrix) and np.array_equal(self.counts, other.counts)


@dataclass(frozen=True)
class MetricReport:
    """Percentages in [0, 100]. ``degenerate`` names every metric that hit a
    zero denominator and was set to 0, e.g. ``"precision_Late"``."""

    per_class: dict
    weighted: dict
    support: dict
    degenerate: tuple = ()

    @property
    def accuracy(self):
        return self.weighted["recall"]


def confusion(y_true, y_pred) -> ConfusionMatrix:
    y_true = np.asarray(y_true).astype(np.int64).ravel()
    y_pred = np.asarray(y_pred).astype(np.int64).ravel()
    if y_true.shape != y_pred.shape:
        raise ShapeMismatchError(f"{y_true.size} true labels vs {y_pred.size} predictions")
    if y_true.size == 0:
        raise DataValidationError("confusion matrix of zero samples")
    if not (np.isin(y_true, (0, 1)).all() and np.isin(y_pred, (0, 1)).all()):
        raise DataValidationError("labels must be 0 (Early) or 1 (Late)")
    counts = np.zeros((2, 2), dtype=np.int64)
    np.add.at(counts, (y_true, y_pred), 1)
    return ConfusionMatrix(counts)


def _ratio(num, den, name, flags):
    if den == 0:
        flags.append(name)
        return 0.0
    return 100.0 * num / den


def metrics(cm: ConfusionMatrix) -> MetricReport:
    """Per-class precision, recall and F1 (each class in turn taken as
    positive) and their support-weighted averages."""
    c = cm.counts
    if cm.total == 0:
        raise DataValidationError("metrics of an empty confusion matrix")
    flags = []
    per_class, support = {}, {}
    for k, name in enumerate(CLASS_NAMES):
        tp = c[k, k]
        p = _ratio(tp, c[:, k].sum(), f"precision_{name}", flags)
        r = _ratio(tp, c[k, :].sum(), f"recall_{name}", flags)
        if p + r == 0:
            flags.append(f"f1_{name}")
            f = 0.0
        else:
            f = 2.0 * p * r / (p + r)
        per_class[name] = {"precision": p, "recall": r, "f1": f}
        support[name] = int(c[k, :].sum())
    total = sum(support.values())
    weighted = {m: sum(support[n] * per_class[n][m] for n in CLASS_NAMES) / total
                for m in METRICS}
    return MetricReport(per_class, weighted, support, tuple(flags))


def weighted_f1(y_true, y_pred) -> float:
    return metrics(confusion(y_true, y_pred)).weighted["f1"]


# ---------------------------------------------------------------------------
# k-fold


def kfold(n: int, k: int, stratified: bool = True, shuffle: bool = True, seed: int = 0,
          y=None) -> list:
    """``k`` (train, test) index pairs whose test sets partition ``range(n)``.

    Indices (grouped by class when stratified, shuffled when asked) are
    dealt to folds round-robin, so fold sizes, and per-fold class counts,
    differ by at most one.
    """
    n, k = int(n), int(k)
    if k < 2:
        raise DataValidationError(f"k must be >= 2, got {k}")
    if k > n:
        raise DataValidationError(f"k={k} exceeds the number of samples {n}")
    rng = np.random.default_rng(seed)
    if stratified:
        if y is None:
            raise DataValidationError("stratified k-fold needs labels")
        y = np.asarray(y)
        if y.shape[0] != n:
            raise ShapeMismatchError(f"{y.shape[0]} labels for n={n}")
        parts = []
        for c in np.unique(y):
            idx = np.flatnonzero(y == c)
            if idx.size < k:
                raise StratificationError(f"class {c} has {idx.size} samples, fewer than k={k}")
            parts.append(rng.permutation(idx) if shuffle else idx)
        order = np.concatenate(parts)
    else:
        order = rng.permutation(n) if shuffle else np.arange(n)
    fold_of = np.empty(n, dtype=np.int64)
    fold_of[order] = np.arange(n) % k
    return [(np.flatnonzero(fold_of != f), np.flatnonzero(fold_of == f)) for f in range(k)]


# ---------------------------------------------------------------------------
# grid search

DEFAULT_GRIDS = {
    "RF": {"n_estimators": [50, 100, 200], "max_depth": [None, 10, 20, 30],
           "min_samples_split": [2, 5, 10]},
    "DT": {"criterion": ["gini", "entropy"], "max_depth": [None, 10, 20, 30],
           "min_samples_split": [2, 5, 10], "max_features": [4, 6, 8],
           "min_samples_leaf": [1, 2, 4]},
    "KNN": {"n_neighbors": [3, 5, 7, 9, 11], "weights": ["uniform", "distance"],
            "metric": ["euclidean", "manhattan"]},
    "LR": {"C": [0.001, 0.01, 0.1, 1, 10, 100], "penalty": ["l1", "l2", "elasticnet", None],
           "solver": ["liblinear", "saga"], "max_iter": [100, 200, 300]},
    "NB": {"var_smoothing": [1e-9, 1e-8, 1e-7, 1e-6]},
    "SVM": {"C": [0.1, 1, 10, 100], "kernel": ["linear", "poly", "rbf", "sigmoid"],
            "gamma": ["scale", "auto"]},
    "GBT": {"n_estimators": [50, 100, 150], "max_depth": [3, 5, 7],
            "learning_rate": [0.01, 0.1, 0.2]},
}

# best settings reported for the non-normal data
SELECTED_PARAMS = {
    "RF": {"n_estimators": 50, "max_depth": 20, "min_samples_split": 10},
    "DT": {"criterion": "entropy", "max_depth": 20, "min_samples_split": 2,
           "min_samples_leaf": 2},
    "KNN": {"n_neighbors": 11, "weights": "uniform", "metric": "manhattan"},
    "LR": {"C": 0.001, "penalty": "l2", "solver": "saga", "max_iter": 200},
    "NB": {"var_smoothing": 1e-9},
    "SVM": {"C": 1, "kernel": "rbf", "gamma": "scale"},
    "GBT": {"n_estimators": 100, "max_depth": 5, "learning_rate": 0.1},
}


@dataclass(frozen=True)
class GridSpec:
    """Cartesian hyperparameter grid for one classifier kind.

    ``base`` holds fixed hyperparameters shared by every candidate.
    """

    kind: str
    params: dict
    cv_folds: int = 5
    base: dict = field(default_factory=dict)
    scoring: str = "weighted_f1"

    def __post_init__(self):
        if not self.params:
            raise HyperparameterError("grid has no parameters")
        for name, values in self.params.items():
            if not isinstance(values, (list, tuple)) or len(values) == 0:
                raise HyperparameterError(f"grid values for {name} must be a non-empty list")
        if self.scoring != "weighted_f1":
            raise HyperparameterError(f"unsupported scoring {self.scoring!r}")
        # validates names and values up front
        self.candidates()

    @property
    def size(self) -> int:
        return int(np.prod([len(v) for v in self.params.values()]))

    def candidates(self) -> list:
        """Specs in enumeration order: last parameter varies fastest."""
        names = list(self.params)
        return [ClassifierSpec(self.kind, {**self.base, **dict(zip(names, combo))})
                for combo in itertools.product(*(self.params[n] for n in names))]

    @classmethod
    def builtin(cls, kind, cv_folds=5) -> "GridSpec":
        return cls(kind, DEFAULT_GRIDS[kind.upper()], cv_folds)


@dataclass(frozen=True)
class CVRow:
    candidate: int
    fold: int
    f1: float
    flagged: bool


@dataclass(frozen=True, eq=False)
class GridResult:
    best_spec: ClassifierSpec
    best_index: int
    mean_scores: tuple
    cv_table: tuple
    candidates: tuple
    best_model: object = None


def _identity(X_tr, y_tr, X_te, fold):
    return X_tr, y_tr, X_te


def grid_search(grid: GridSpec, X, y, seed: int = 0, preprocess=None,
                refit: bool = True, folds=None) -> GridResult:
    """Mean weighted F1 over stratified folds for every grid candidate.

    ``preprocess(X_train, y_train, X_test, fold)`` is fitted inside each
    training fold and its output is shared by all candidates; it may resample
    the training rows. A fold whose (preprocessed) training labels contain a
    single class scores 0 for every candidate and is flagged. The best
    candidate is the first one with the highest mean; with ``refit`` it is
    refitted on all of ``X`` after ``preprocess`` is fitted on all of ``X``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    preprocess = preprocess or _identity
    specs = grid.candidates()
    if folds is None:
        folds = kfold(X.shape[0], grid.cv_folds, stratified=True, shuffle=True,
                      seed=seed, y=y)
    scores = np.zeros((len(specs), len(folds)))
    rows = []
    for f, (tr, te) in enumerate(folds):
        X_tr, y_tr, X_te = preprocess(X[tr], y[tr], X[te], f)
        if np.unique(y_tr).size < 2:
            rows.extend(CVRow(c, f, 0.0, True) for c in range(len(specs)))
            continue
        models = fit_many(specs, X_tr, y_tr, seed)
        for c, m in enumerate(models):
            scores[c, f] = weighted_f1(y[te], predict(m, X_te))
            rows.append(CVRow(c, f, float(scores[c, f]), False))
    rows.sort(key=lambda r: (r.candidate, r.fold))
    means = scores.mean(axis=1)
    best = int(np.argmax(means))
    model = None
    if refit:
        X_all, y_all, _ = preprocess(X, y, X[:0], -1)
        if np.unique(y_all).size < 2:
            raise SingleClassError("cannot refit on single-class training data")
        model = fit_many([specs[best]], X_all, y_all, seed)[0]
    return GridResult(specs[best], best, tuple(float(m) for m in means), tuple(rows),
                      tuple(specs), model)


def write_cv_table(result: GridResult, path, extra=None):
    """One row per (candidate, fold). ``extra`` prepends constant columns."""
    extra = extra or {}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*extra, "candidate", "params", "fold", "f1", "flagged"])
        for r in result.cv_table:
            params = json.dumps(result.candidates[r.candidate].to_dict()["params"],
                                sort_keys=True)
            w.writerow([*extra.values(), r.candidate, params, r.fold, repr(r.f1),
                        int(r.flagged)])


# ---------------------------------------------------------------------------
# trial summaries


@dataclass(frozen=True)
class TrialSummary:
    """Per-run weighted metrics for one algorithm; ``values[metric]`` is a
    tuple with one entry per run."""

    algorithm: str
    values: dict

    @property
    def n_runs(self):
        return len(next(iter(self.values.values())))

    @property
    def mean(self) -> dict:
        return {m: float(np.mean(v)) for m, v in self.values.items()}

    @property
    def best(self) -> dict:
        return {m: float(np.max(v)) for m, v in self.values.items()}

    @classmethod
    def from_reports(cls, algorithm, reports) -> "TrialSummary":
        if not reports:
            raise DataValidationError("no runs to summarize")
        return cls(algorithm, {m: tuple(r.weighted[m] for r in reports) for m in METRICS})
