"""Differential expression between Early and Late samples."""

from __future__ import annotations

import csv
import enum
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset, StageLabel
from .errors import DataValidationError, SingleClassError
from .special import t_sf_two_sided

P_FLOOR = 1e-300
T_MAX = sys.float_info.max

VARIANTS = ("pooled", "welch")


class RegulationStatus(str, enum.Enum):
    UP = "Up"
    DOWN = "Down"
    NOT_SIGNIFICANT = "NotSignificant"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class DEGRecord:
    gene_id: str
    log2fc: float
    t_stat: float
    p_value: float
    status: RegulationStatus


@dataclass(frozen=True)
class DEGTable:
    records: tuple
    alpha: float
    lfc_threshold: float
    pseudocount: float
    variant: str = "pooled"

    def counts(self) -> dict:
        out = {"up": 0, "down": 0, "ns": 0}
        key = {RegulationStatus.UP: "up", RegulationStatus.DOWN: "down",
               RegulationStatus.NOT_SIGNIFICANT: "ns"}
        for r in self.records:
            out[key[r.status]] += 1
        return out

    def summary(self) -> dict:
        return {**self.counts(), "alpha": self.alpha, "lfc_threshold": self.lfc_threshold}


def _t_columns(a: np.ndarray, b: np.ndarray, variant: str):
    """Column-wise two-sample t statistics and two-sided p-values for
    ``a`` (n_a, p) against ``b`` (n_b, p)."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    na, nb = a.shape[0], b.shape[0]
    if na < 2 or nb < 2:
        raise DataValidationError(f"each group needs at least 2 values (got {na} and {nb})")
    ma, mb = a.mean(axis=0), b.mean(axis=0)
    va, vb = a.var(axis=0, ddof=1), b.var(axis=0, ddof=1)
    diff = ma - mb
    if variant == "pooled":
        df = np.full(diff.shape, float(na + nb - 2))
        sp2 = ((na - 1) * va + (nb - 1) * vb) / (na + nb - 2)
        se = np.sqrt(sp2 * (1.0 / na + 1.0 / nb))
    else:
        qa, qb = va / na, vb / nb
        se = np.sqrt(qa + qb)
        with np.errstate(divide="ignore", invalid="ignore"):
            df = (qa + qb) ** 2 / (qa ** 2 / (na - 1) + qb ** 2 / (nb - 1))

    # exact constancy, not se == 0: means of identical values can round
    degenerate = (np.ptp(a, axis=0) == 0.0) & (np.ptp(b, axis=0) == 0.0)
    diff = np.where(degenerate, a[0] - b[0], diff)
    safe_se = np.where(degenerate, 1.0, se)
    safe_df = np.where(degenerate | ~np.isfinite(df), 1.0, df)
    t = diff / safe_se
    p = t_sf_two_sided(t, safe_df)
    # zero spread: equal means carry no evidence, unequal means are maximal
    same = degenerate & (diff == 0.0)
    apart = degenerate & (diff != 0.0)
    t = np.where(same, 0.0, np.where(apart, np.copysign(T_MAX, diff), t))
    p = np.where(same, 1.0, np.where(apart, P_FLOOR, p))
    return t, np.clip(p, 0.0, 1.0)


def two_sample_t(a, b, variant: str = "pooled"):
    """Independent two-sample t-test of ``a`` against ``b``.

    ``variant="pooled"`` is Student's equal-variance test with
    ``len(a) + len(b) - 2`` degrees of freedom; ``"welch"`` uses the
    Welch-Satterthwaite degrees of freedom. The p-value is two-sided.

    If both groups have zero spread, equal means give ``(0.0, 1.0)`` and
    unequal means give ``(+-T_MAX, P_FLOOR)``.
    """
    a = np.asarray(a, dtype=np.float64).reshape(-1, 1)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 1)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise DataValidationError("t-test inputs must be finite")
    t, p = _t_columns(a, b, variant)
    return float(t[0]), float(p[0])


def log2_fold_change(mean_late, mean_early, pseudocount: float = 1e-9):
    """``log2((mean_late + c) / (mean_early + c))``; works elementwise."""
    if pseudocount < 0:
        raise ValueError("pseudocount must be non-negative")
    late = np.asarray(mean_late, dtype=np.float64) + pseudocount
    early = np.asarray(mean_early, dtype=np.float64) + pseudocount
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log2(late / early)
    out = np.where((late == 0) & (early == 0), 0.0, out)
    return float(out) if out.ndim == 0 else out


def _status(lfc, p, alpha, lfc_threshold):
    if p < alpha and lfc > lfc_threshold:
        return RegulationStatus.UP
    if p < alpha and lfc < -lfc_threshold:
        return RegulationStatus.DOWN
    return RegulationStatus.NOT_SIGNIFICANT


def deg_analysis(dataset: LabeledDataset, alpha: float = 0.05, lfc_threshold: float = 1.0,
                 variant: str = "pooled", pseudocount: float = 1e-9) -> DEGTable:
    """Per-gene Late-vs-Early fold change and t-test.

    Fold changes compare group means (Late over Early) with a pseudocount;
    the t statistic is Late minus Early. p-values are not adjusted for
    multiple testing.
    """
    y = dataset.y
    late = dataset.X[y == StageLabel.LATE]
    early = dataset.X[y == StageLabel.EARLY]
    if late.shape[0] == 0 or early.shape[0] == 0:
        raise SingleClassError("differential expression needs both Early and Late samples")
    t, p = _t_columns(late, early, variant)
    lfc = log2_fold_change(late.mean(axis=0), early.mean(axis=0), pseudocount)
    records = tuple(
        DEGRecord(g, float(f), float(ti), float(pi), _status(f, pi, alpha, lfc_threshold))
        for g, f, ti, pi in zip(dataset.matrix.gene_ids, np.atleast_1d(lfc), t, p))
    return DEGTable(records, alpha, lfc_threshold, pseudocount, variant)


def volcano_export(table: DEGTable) -> list:
    """Rows ``(gene_id, log2fc, neg_log10_p, status)`` in gene order, with
    p floored at 1e-300 before taking the log."""
    return [(r.gene_id, r.log2fc, -math.log10(max(r.p_value, P_FLOOR)), str(r.status))
            for r in table.records]


def write_volcano_csv(table: DEGTable, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["gene_id", "log2fc", "neg_log10_p", "status"])
        for gene, lfc, nlp, status in volcano_export(table):
            w.writerow([gene, repr(lfc), repr(nlp), status])


def write_deg_summary(table: DEGTable, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(table.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")
