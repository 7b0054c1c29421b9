"""Input checks and small numeric helpers shared by the classifiers."""

import numpy as np

from ..errors import DataValidationError, ShapeMismatchError, SingleClassError


def check_Xy(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2:
        raise DataValidationError(f"X must be 2-D, got shape {X.shape}")
    if X.shape[0] == 0 or X.shape[1] == 0:
        raise DataValidationError("cannot fit on empty input")
    if y.shape != (X.shape[0],):
        raise ShapeMismatchError(f"{y.shape[0] if y.ndim else 0} labels for {X.shape[0]} rows")
    if not np.all(np.isfinite(X)):
        raise DataValidationError("X contains non-finite values")
    if not np.all((y == 0) | (y == 1)):
        raise DataValidationError("labels must be 0 (Early) or 1 (Late)")
    y = y.astype(np.int64)
    if y.min() == y.max():
        raise SingleClassError("training labels contain a single class")
    return X, y


def check_X(X, n_features):
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataValidationError(f"X must be 2-D, got shape {X.shape}")
    if X.shape[1] != n_features:
        raise ShapeMismatchError(f"model expects {n_features} features, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise DataValidationError("X contains non-finite values")
    return X


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def log1pexp(z):
    """``log(1 + exp(z))`` without overflow."""
    z = np.asarray(z, dtype=np.float64)
    return np.logaddexp(0.0, z)


def logistic_loss(margin, y):
    """Mean binary cross-entropy of labels ``y`` in {0, 1} given logits."""
    return float(np.mean(log1pexp(margin) - y * margin))


def sub_seeds(seed, n):
    """``n`` 32-bit seeds derived from ``seed``; prefixes are stable in n."""
    return np.random.SeedSequence(int(seed)).generate_state(n).astype(np.int64)
