"""Training-set augmentation: SMOTE, stochastic feature augmentation and
Gaussian noise expansion.

Every random draw comes from a generator keyed on ``(seed, row)``, so a row's
output does not depend on how many other rows are generated. The array-level
functions (``*_arrays``) are what the pipeline calls; the dataset-level
wrappers add sample ids and labels.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .data import NONNEGATIVE_UNITS, ExpressionMatrix, LabeledDataset, round_half_up
from .errors import DataValidationError, HyperparameterError, SingleClassError

BALANCE = "balance"


class AugmentWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SmoteParams:
    """``target`` is ``"balance"`` (grow the minority to the majority size)
    or a float ratio r, meaning the minority is grown to
    ``round(r * n_majority)`` rows."""

    k_neighbors: int = 5
    target: object = BALANCE
    seed: int = 0

    def __post_init__(self):
        if int(self.k_neighbors) < 1:
            raise HyperparameterError(f"k_neighbors must be >= 1, got {self.k_neighbors}")
        if self.target != BALANCE:
            try:
                ratio = float(self.target)
            except (TypeError, ValueError):
                raise HyperparameterError(f"target must be {BALANCE!r} or a ratio, "
                                          f"got {self.target!r}") from None
            if not ratio > 0:
                raise HyperparameterError(f"target ratio must be positive, got {ratio}")


@dataclass(frozen=True)
class SFAParams:
    """``alpha ~ N(1, sigma1 I)`` and ``beta ~ N(0, sigma2 I)``; the sigmas are
    covariance scales, so the per-coordinate standard deviations are
    ``sqrt(sigma1)`` and ``sqrt(sigma2)``. ``mu`` shifts the mean of beta."""

    mu: float = 0.0
    sigma1: float = 0.01
    sigma2: float = None

    def __post_init__(self):
        if self.sigma2 is None:
            object.__setattr__(self, "sigma2", self.sigma1)
        if self.sigma1 < 0 or self.sigma2 < 0:
            raise HyperparameterError("sigma1 and sigma2 must be non-negative")


@dataclass(frozen=True)
class NoiseParams:
    """Additive noise ``mu + sigma * Z``. With ``relative`` set, sigma is
    multiplied by each feature's training standard deviation."""

    mu: float = 0.0
    sigma: float = 0.01
    relative: bool = True
    factor: int = 10

    def __post_init__(self):
        if self.sigma < 0:
            raise HyperparameterError(f"sigma must be non-negative, got {self.sigma}")
        if int(self.factor) != self.factor or self.factor < 1:
            raise HyperparameterError(f"factor must be an integer >= 1, got {self.factor}")


@dataclass(frozen=True)
class Provenance:
    """One generated row. ``neighbor_row`` is -1 when there is none."""

    kind: str
    base_row: int
    neighbor_row: int
    delta_or_sigma: float


@dataclass(frozen=True, eq=False)
class AugmentResult:
    dataset: LabeledDataset
    provenance: tuple
    warnings: tuple = ()


def _row_rng(seed, row):
    return np.random.default_rng((int(seed), int(row)))


def _open_unit(rng):
    d = rng.random()
    while d == 0.0:
        d = rng.random()
    return d


# ---------------------------------------------------------------------------
# SMOTE


def minority_neighbors(A, k):
    """Indices of the ``k`` nearest other rows of ``A`` (Euclidean), ties
    broken by lower row index."""
    n = A.shape[0]
    out = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        d = ((A - A[i]) ** 2).sum(axis=1)
        d[i] = np.inf
        out[i] = np.argsort(d, kind="stable")[:k]
    return out


def smote_arrays(X, y, params: SmoteParams):
    """Oversample the minority class of ``(X, y)``.

    Returns ``(X_out, y_out, provenance, notes)`` where the original rows come
    first, unchanged, followed by the synthetic rows. ``provenance`` indexes
    rows of the input ``X``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    if classes.shape[0] < 2:
        raise SingleClassError("SMOTE needs two classes")
    if classes.shape[0] > 2:
        raise DataValidationError("SMOTE here supports binary labels only")
    minority = classes[np.argmin(counts)]
    n_min, n_maj = counts.min(), counts.max()
    if params.target == BALANCE:
        goal = n_maj
    else:
        goal = round_half_up(float(params.target) * n_maj)
    n_new = max(0, goal - n_min)
    if n_new == 0:
        return X.copy(), y.copy(), (), ()
    if n_min < 2:
        raise DataValidationError(f"SMOTE needs at least 2 minority samples, got {n_min}")

    notes = []
    k = int(params.k_neighbors)
    if k >= n_min:
        k = n_min - 1
        msg = f"k_neighbors={params.k_neighbors} >= minority size {n_min}; using k={k}"
        warnings.warn(msg, AugmentWarning, stacklevel=2)
        notes.append(msg)

    rows = np.flatnonzero(y == minority)
    A = X[rows]
    nbrs = minority_neighbors(A, k)
    synth = np.empty((n_new, X.shape[1]))
    prov = []
    for i in range(n_new):
        rng = _row_rng(params.seed, i)
        b = int(rng.integers(n_min))
        j = int(nbrs[b, rng.integers(k)])
        delta = _open_unit(rng)
        synth[i] = A[b] + delta * (A[j] - A[b])
        prov.append(Provenance("smote", int(rows[b]), int(rows[j]), float(delta)))
    X_out = np.vstack([X, synth])
    y_out = np.concatenate([y, np.full(n_new, minority, dtype=y.dtype)])
    return X_out, y_out, tuple(prov), tuple(notes)


def _unique_ids(existing, stem, n):
    taken = set(existing)
    out = []
    for i in range(n):
        name = f"{stem}{i + 1}"
        while name in taken:
            name += "_"
        taken.add(name)
        out.append(name)
    return out


def _units_for(matrix, values):
    if matrix.units in NONNEGATIVE_UNITS and values.size and values.min() < 0:
        return "augmented"
    return matrix.units


def smote_with_provenance(train: LabeledDataset, params: SmoteParams) -> AugmentResult:
    X, y, prov, notes = smote_arrays(train.X, train.y, params)
    n_new = X.shape[0] - train.n_samples
    m = train.matrix
    ids = m.sample_ids + tuple(_unique_ids(m.sample_ids, "smote_", n_new))
    out = LabeledDataset(ExpressionMatrix(ids, m.gene_ids, X, _units_for(m, X)), y)
    return AugmentResult(out, prov, notes)


def smote(train: LabeledDataset, params: SmoteParams) -> LabeledDataset:
    """Append synthetic minority rows ``x + delta * (x_nn - x)``,
    ``delta`` uniform on (0, 1), until the target class ratio is met."""
    return smote_with_provenance(train, params).dataset


# ---------------------------------------------------------------------------
# stochastic feature augmentation


def sfa(features, params: SFAParams, seed: int = 0):
    """Return ``alpha * z + beta`` for each row ``z``, with fresh ``alpha`` and
    ``beta`` vectors per row. The input is not modified."""
    Z = np.asarray(features, dtype=np.float64)
    flat = Z.reshape(1, -1) if Z.ndim == 1 else Z.reshape(Z.shape[0], -1)
    s1, s2 = np.sqrt(params.sigma1), np.sqrt(params.sigma2)
    out = np.empty_like(flat)
    for r in range(flat.shape[0]):
        rng = _row_rng(seed, r)
        alpha = 1.0 + s1 * rng.standard_normal(flat.shape[1])
        beta = params.mu + s2 * rng.standard_normal(flat.shape[1])
        out[r] = alpha * flat[r] + beta
    return out.reshape(Z.shape)


# ---------------------------------------------------------------------------
# Gaussian expansion


def gaussian_expand_arrays(X, y, params: NoiseParams, seed: int = 0):
    """Originals followed by ``factor - 1`` noisy copies of each row
    (copies of row 0 first, then row 1, ...)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    f = int(params.factor)
    if f == 1:
        return X.copy(), y.copy(), ()
    scale = params.sigma * (X.std(axis=0) if params.relative else np.ones(X.shape[1]))
    copies = np.empty((X.shape[0] * (f - 1), X.shape[1]))
    prov = []
    for r in range(X.shape[0]):
        rng = _row_rng(seed, r)
        noise = params.mu + scale * rng.standard_normal((f - 1, X.shape[1]))
        copies[r * (f - 1):(r + 1) * (f - 1)] = X[r] + noise
        prov.extend(Provenance("gaussian", r, -1, float(params.sigma)) for _ in range(f - 1))
    return (np.vstack([X, copies]), np.concatenate([y, np.repeat(y, f - 1)]), tuple(prov))


def gaussian_expand(train: LabeledDataset, params: NoiseParams, seed: int = 0) -> LabeledDataset:
    X, y, _ = gaussian_expand_arrays(train.X, train.y, params, seed)
    m = train.matrix
    f = int(params.factor)
    extra = [f"{s}#noise{j}" for s in m.sample_ids for j in range(1, f)]
    ids = m.sample_ids + tuple(extra)
    return LabeledDataset(ExpressionMatrix(ids, m.gene_ids, X, _units_for(m, X)), y)


def write_provenance_csv(records, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kind", "base_row", "neighbor_row", "delta_or_sigma"])
        for r in records:
            w.writerow([r.kind, r.base_row, "" if r.neighbor_row < 0 else r.neighbor_row,
                        repr(r.delta_or_sigma)])
