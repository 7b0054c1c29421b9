"""Standardization, PCA and FastICA feature extraction.

All ``fit_*`` functions take a sample x feature array (or an
:class:`~stageml.data.ExpressionMatrix`) and return an immutable model; the
matching ``*_transform`` applies it to new rows without refitting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._npz import save_npz
from .data import ExpressionMatrix
from .errors import DataValidationError, NumericalError, ShapeMismatchError

PCA_FORMAT = "stageml.pca/1"
ICA_FORMAT = "stageml.ica/1"
STANDARDIZER_FORMAT = "stageml.standardizer/1"

RANK_EPS = 1e-12


def _as_array(X):
    if isinstance(X, ExpressionMatrix):
        return X.values
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataValidationError(f"expected a 2-D array, got shape {X.shape}")
    return X


def _wrap(like, values, units, prefix=None):
    if not isinstance(like, ExpressionMatrix):
        return values
    ids = None if prefix is None else tuple(f"{prefix}{i + 1}" for i in range(values.shape[1]))
    return like.with_values(values, units, ids)


def _frozen(*arrays):
    for a in arrays:
        a.setflags(write=False)


def _check_width(expected, X):
    if X.shape[1] != expected:
        raise ShapeMismatchError(f"model expects {expected} features, got {X.shape[1]}")


# ---------------------------------------------------------------------------
# standardization


@dataclass(frozen=True, eq=False)
class Standardizer:
    means: np.ndarray
    stds: np.ndarray

    def transform(self, X):
        return apply_standardizer(self, X)


def fit_standardizer(X) -> Standardizer:
    """Column means and population standard deviations."""
    A = _as_array(X)
    if A.shape[0] < 2:
        raise DataValidationError("standardizer needs at least 2 rows")
    means = A.mean(axis=0)
    stds = A.std(axis=0)
    stds[np.ptp(A, axis=0) == 0.0] = 0.0
    _frozen(means, stds)
    return Standardizer(means, stds)


def apply_standardizer(model: Standardizer, X):
    """``(X - mean) / std``; zero-std columns are divided by 1 instead."""
    A = _as_array(X)
    _check_width(model.means.shape[0], A)
    scale = np.where(model.stds == 0.0, 1.0, model.stds)
    return _wrap(X, (A - model.means) / scale, "standardized")


# ---------------------------------------------------------------------------
# PCA


@dataclass(frozen=True, eq=False)
class PCAModel:
    """``components`` rows are orthonormal principal axes, ordered by the
    covariance eigenvalues in ``explained_variance`` (descending)."""

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    @property
    def n_components(self):
        return self.components.shape[0]

    def transform(self, X):
        return pca_transform(self, X)


def _orient(rows):
    """Flip each row so its largest-magnitude entry is positive."""
    pivot = np.argmax(np.abs(rows), axis=1)
    signs = np.sign(rows[np.arange(rows.shape[0]), pivot])
    signs[signs == 0] = 1.0
    return rows * signs[:, None]


def pca_fit(X, n_components: int) -> PCAModel:
    """Principal components from the SVD of the centered data.

    The right singular vectors are the eigenvectors of the sample
    covariance (denominator n - 1) and ``s**2 / (n - 1)`` its eigenvalues,
    without forming the p x p covariance matrix.
    """
    A = _as_array(X)
    n, p = A.shape
    if n < 2:
        raise DataValidationError("PCA needs at least 2 samples")
    if not 1 <= n_components <= min(n - 1, p):
        raise DataValidationError(
            f"n_components must lie in [1, {min(n - 1, p)}], got {n_components}")
    mean = A.mean(axis=0)
    _, s, vt = np.linalg.svd(A - mean, full_matrices=False)
    components = _orient(vt[:n_components].copy())
    explained = s[:n_components] ** 2 / (n - 1)
    _frozen(mean, components, explained)
    return PCAModel(mean, components, explained)


def pca_transform(model: PCAModel, X):
    A = _as_array(X)
    _check_width(model.mean.shape[0], A)
    return _wrap(X, (A - model.mean) @ model.components.T, "pca", "PC")


# ---------------------------------------------------------------------------
# FastICA


@dataclass(frozen=True, eq=False)
class ICAModel:
    """Sources are ``unmixing @ whitening @ (x - mean)``.

    ``mixing_estimate`` (features x components) maps sources back to
    centered feature space.
    """

    mean: np.ndarray
    whitening: np.ndarray
    unmixing: np.ndarray
    mixing_estimate: np.ndarray
    n_components: int
    converged: bool
    iterations_used: int

    def transform(self, X):
        return ica_transform(self, X)


def _whiten(A, n_components):
    n = A.shape[0]
    mean = A.mean(axis=0)
    _, s, vt = np.linalg.svd(A - mean, full_matrices=False)
    ev = s[:n_components] ** 2 / (n - 1)
    if ev.shape[0] < n_components or ev[-1] < RANK_EPS:
        raise NumericalError(
            f"covariance is rank deficient: eigenvalue {ev[-1] if ev.size else 0.0:.3g} "
            f"for component {n_components}")
    basis = vt[:n_components]
    whitening = basis / np.sqrt(ev)[:, None]
    dewhitening = basis.T * np.sqrt(ev)[None, :]
    return mean, whitening, dewhitening


def _deflation(Z, n_components, max_iter, tol, rng):
    n = Z.shape[0]
    W = np.zeros((n_components, n_components))
    converged = True
    used = 0
    for c in range(n_components):
        w = rng.standard_normal(n_components)
        w -= W[:c].T @ (W[:c] @ w)
        w /= np.linalg.norm(w)
        done = False
        for it in range(1, max_iter + 1):
            wx = Z @ w
            g = np.tanh(wx)
            w_new = Z.T @ g / n - (1.0 - g * g).mean() * w
            w_new -= W[:c].T @ (W[:c] @ w_new)
            w_new /= np.linalg.norm(w_new)
            lim = abs(abs(w_new @ w) - 1.0)
            w = w_new
            if lim < tol:
                done = True
                break
        used = max(used, it)
        converged &= done
        W[c] = w
    return W, converged, used


def ica_fit(X, n_components: int, max_iter: int = 200, tol: float = 1e-4,
            seed: int = 0) -> ICAModel:
    """FastICA (deflation, ``g = tanh``) on data whitened to the top
    ``n_components`` covariance eigenpairs.

    ``converged`` is False if any component missed ``tol`` within
    ``max_iter`` iterations; the model is still returned.
    """
    A = _as_array(X)
    n, p = A.shape
    if not 1 <= n_components <= min(n - 1, p):
        raise DataValidationError(
            f"n_components must lie in [1, {min(n - 1, p)}], got {n_components}")
    mean, whitening, dewhitening = _whiten(A, n_components)
    Z = (A - mean) @ whitening.T
    W, converged, used = _deflation(Z, n_components, max_iter, tol,
                                    np.random.default_rng(seed))
    mixing = dewhitening @ W.T
    _frozen(mean, whitening, W, mixing)
    return ICAModel(mean, whitening, W, mixing, n_components, bool(converged), int(used))


def ica_transform(model: ICAModel, X):
    A = _as_array(X)
    _check_width(model.mean.shape[0], A)
    return _wrap(X, (A - model.mean) @ model.whitening.T @ model.unmixing.T, "ica", "IC")


# ---------------------------------------------------------------------------
# persistence


def save_model(model, path):
    """Write a fitted transform to ``.npz`` with a format tag."""
    if isinstance(model, PCAModel):
        arrays = dict(format=PCA_FORMAT, mean=model.mean, components=model.components,
                      explained_variance=model.explained_variance)
    elif isinstance(model, ICAModel):
        arrays = dict(format=ICA_FORMAT, mean=model.mean, whitening=model.whitening,
                      unmixing=model.unmixing, mixing_estimate=model.mixing_estimate,
                      converged=model.converged, iterations_used=model.iterations_used)
    elif isinstance(model, Standardizer):
        arrays = dict(format=STANDARDIZER_FORMAT, means=model.means, stds=model.stds)
    else:
        raise TypeError(f"cannot save {type(model).__name__}")
    save_npz(path, **arrays)


def load_model(path):
    with np.load(path, allow_pickle=False) as z:
        tag = str(z["format"])
        if tag == PCA_FORMAT:
            arrs = [z[k].copy() for k in ("mean", "components", "explained_variance")]
            _frozen(*arrs)
            return PCAModel(*arrs)
        if tag == ICA_FORMAT:
            arrs = [z[k].copy() for k in ("mean", "whitening", "unmixing", "mixing_estimate")]
            _frozen(*arrs)
            return ICAModel(*arrs, n_components=arrs[2].shape[0],
                            converged=bool(z["converged"]),
                            iterations_used=int(z["iterations_used"]))
        if tag == STANDARDIZER_FORMAT:
            arrs = [z["means"].copy(), z["stds"].copy()]
            _frozen(*arrs)
            return Standardizer(*arrs)
    raise DataValidationError(f"unknown model format {tag!r}")
