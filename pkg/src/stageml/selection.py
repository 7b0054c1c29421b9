"""Univariate ANOVA F scoring and false-positive-rate feature selection."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .data import ExpressionMatrix, LabeledDataset
from .errors import DataValidationError, EmptySelectionError, SingleClassError
from .special import f_sf

SCORE_FUNCS = ("f_classif",)


@dataclass(frozen=True)
class FeatureScore:
    feature_index: int
    f_stat: float
    p_value: float
    degenerate: bool = False


@dataclass(frozen=True)
class SelectionMask:
    kept_indices: tuple
    alpha: float

    def __post_init__(self):
        kept = tuple(int(i) for i in self.kept_indices)
        if any(b <= a for a, b in zip(kept, kept[1:])):
            raise ValueError("kept_indices must be strictly increasing")
        object.__setattr__(self, "kept_indices", kept)

    def __len__(self):
        return len(self.kept_indices)


def f_classif_arrays(X, y):
    """One-way ANOVA F and p-value per column of ``X`` grouped by ``y``.

    Returns ``(F, p, degenerate)``. Columns with zero total spread get
    ``F = 0, p = 1``; columns with zero within-group spread but separated
    group means get ``F = inf, p = 0``. Both are flagged degenerate.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    classes = np.unique(y)
    n, k = X.shape[0], classes.shape[0]
    if k < 2:
        raise SingleClassError("ANOVA needs at least two classes")
    if n <= k:
        raise DataValidationError(f"ANOVA needs more samples ({n}) than classes ({k})")
    grand = X.mean(axis=0)
    ss_between = np.zeros(X.shape[1])
    ss_within = np.zeros(X.shape[1])
    constant_within = np.ones(X.shape[1], dtype=bool)
    for c in classes:
        Xc = X[y == c]
        mc = Xc.mean(axis=0)
        ss_between += Xc.shape[0] * (mc - grand) ** 2
        ss_within += ((Xc - mc) ** 2).sum(axis=0)
        constant_within &= np.ptp(Xc, axis=0) == 0.0
    dfb, dfw = k - 1, n - k
    ms_between = ss_between / dfb
    ms_within = ss_within / dfw
    # exact constancy checks; rounding leaves tiny sums of squares
    flat = np.ptp(X, axis=0) == 0.0
    separated = constant_within & ~flat
    regular = ~(flat | separated)
    F = np.zeros(X.shape[1])
    p = np.ones(X.shape[1])
    F[regular] = ms_between[regular] / ms_within[regular]
    p[regular] = np.clip(f_sf(F[regular], dfb, dfw), 0.0, 1.0)
    F[separated] = np.inf
    p[separated] = 0.0
    return F, p, flat | separated


def anova_f_classif(dataset: LabeledDataset) -> list:
    F, p, degenerate = f_classif_arrays(dataset.X, dataset.y)
    return [FeatureScore(i, float(f), float(q), bool(d))
            for i, (f, q, d) in enumerate(zip(F, p, degenerate))]


def select_fpr(scores, alpha: float = 0.05) -> SelectionMask:
    """Keep every feature with ``p < alpha`` (strict), in input order."""
    if len(scores) == 0:
        raise DataValidationError("no scores to select from")
    return SelectionMask(tuple(s.feature_index for s in scores if s.p_value < alpha), alpha)


def project(matrix: ExpressionMatrix, mask: SelectionMask) -> ExpressionMatrix:
    """Column subset of ``matrix`` named by ``mask``."""
    if len(mask) == 0:
        raise EmptySelectionError(f"no feature has p < {mask.alpha}")
    idx = np.asarray(mask.kept_indices)
    if idx.max() >= matrix.n_genes or idx.min() < 0:
        raise DataValidationError(
            f"mask index {int(idx.max())} out of range for {matrix.n_genes} genes")
    return matrix.take_genes(idx)


class FprSelector:
    """Fit-on-train, apply-anywhere wrapper used by the pipeline."""

    def __init__(self, alpha=0.05, score_func="f_classif"):
        if score_func not in SCORE_FUNCS:
            raise ValueError(f"score_func must be one of {SCORE_FUNCS}")
        self.alpha = alpha
        self.score_func = score_func

    def fit(self, X, y):
        F, p, _ = f_classif_arrays(X, y)
        self.f_stat_, self.p_value_ = F, p
        self.kept_ = np.flatnonzero(p < self.alpha)
        return self

    def transform(self, X):
        if self.kept_.size == 0:
            raise EmptySelectionError(f"no feature has p < {self.alpha}")
        return np.asarray(X)[:, self.kept_]


def write_scores_csv(scores, gene_ids, mask: SelectionMask, path):
    kept = set(mask.kept_indices)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature_index", "gene_id", "f_stat", "p_value", "kept"])
        for s in scores:
            w.writerow([s.feature_index, gene_ids[s.feature_index], repr(s.f_stat),
                        repr(s.p_value), int(s.feature_index in kept)])
