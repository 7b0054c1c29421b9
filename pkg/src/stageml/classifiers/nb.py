"""Gaussian naive Bayes."""

import numpy as np

from ..errors import NumericalError
from ._common import check_X, check_Xy
from .spec import ClassifierSpec, TrainedModel


def fit_gaussian_nb(spec: ClassifierSpec, X, y, seed: int = 0) -> TrainedModel:
    """Class priors, per-class feature means and variances.

    Every variance is increased by ``var_smoothing`` times the largest
    per-feature variance of the whole training set.
    """
    X, y = check_Xy(X, y)
    eps = spec.params["var_smoothing"] * X.var(axis=0).max()
    means = np.stack([X[y == c].mean(axis=0) for c in (0, 1)])
    var = np.stack([X[y == c].var(axis=0) for c in (0, 1)]) + eps
    if np.any(var <= 0):
        raise NumericalError("zero variance after smoothing; increase var_smoothing")
    priors = np.array([np.mean(y == 0), np.mean(y == 1)])
    return TrainedModel(spec, dict(priors=priors, means=means, var=var, epsilon=eps),
                        X.shape[1], seed)


def joint_log_likelihood(model: TrainedModel, X):
    """``log P(c) + sum_j log N(x_j | mu_cj, var_cj)`` for c = Early, Late."""
    X = check_X(X, model.n_features)
    s = model.state
    out = np.empty((X.shape[0], 2))
    for c in (0, 1):
        norm = -0.5 * np.sum(np.log(2.0 * np.pi * s["var"][c]))
        out[:, c] = (np.log(s["priors"][c]) + norm
                     - 0.5 * np.sum((X - s["means"][c]) ** 2 / s["var"][c], axis=1))
    return out


def predict_nb_score(model: TrainedModel, X):
    """Posterior probability of Late."""
    jll = joint_log_likelihood(model, X)
    return 1.0 / (1.0 + np.exp(jll[:, 0] - jll[:, 1]))


def predict_nb(model: TrainedModel, X):
    jll = joint_log_likelihood(model, X)
    return (jll[:, 1] > jll[:, 0]).astype(np.int64)
