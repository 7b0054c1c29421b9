"""Penalized logistic regression.

The objective is

    (1/n) sum_i log(1 + exp(-s_i (w.x_i + b))) + R(w) / (C n)

with ``s_i = +-1`` and R one of ``0.5 |w|^2`` (l2), ``|w|_1`` (l1),
``r |w|_1 + (1 - r)/2 |w|^2`` (elasticnet, r = l1_ratio) or 0. The bias is
not penalized. All penalties are handled by accelerated proximal gradient
with backtracking; for l2 and no penalty the proximal step is the identity
and this is plain accelerated gradient descent.
"""

import numpy as np

from ._common import check_X, check_Xy, log1pexp, sigmoid
from .spec import ClassifierSpec, TrainedModel


def _weights(penalty, l1_ratio):
    """(l1 weight, l2 weight) of the penalty R."""
    if penalty is None:
        return 0.0, 0.0
    if penalty == "l1":
        return 1.0, 0.0
    if penalty == "l2":
        return 0.0, 1.0
    return l1_ratio, 1.0 - l1_ratio


def _smooth(theta, X, s, lam2):
    """Smooth part of the objective and its gradient; ``theta = [w, b]``."""
    w, b = theta[:-1], theta[-1]
    z = s * (X @ w + b)
    n = X.shape[0]
    f = log1pexp(-z).mean() + 0.5 * lam2 * w @ w
    r = -s * sigmoid(-z) / n
    g = np.empty_like(theta)
    g[:-1] = X.T @ r + lam2 * w
    g[-1] = r.sum()
    return f, g


def lr_objective(w, b, X, y, C=1.0, penalty="l2", l1_ratio=0.5):
    X = np.asarray(X, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    s = 2.0 * np.asarray(y, dtype=np.float64) - 1.0
    a1, a2 = _weights(penalty, l1_ratio)
    n = X.shape[0]
    f, _ = _smooth(np.append(w, b), X, s, a2 / (C * n))
    return f + a1 / (C * n) * np.abs(w).sum()


def lr_gradient(w, b, X, y, C=1.0, penalty="l2", l1_ratio=0.5):
    """Gradient of the smooth part of the objective, as ``(grad_w, grad_b)``.

    For l1 and elasticnet the |w|_1 term is excluded (it is handled by the
    proximal step).
    """
    X = np.asarray(X, dtype=np.float64)
    s = 2.0 * np.asarray(y, dtype=np.float64) - 1.0
    _, a2 = _weights(penalty, l1_ratio)
    _, g = _smooth(np.append(np.asarray(w, dtype=np.float64), b), X, s, a2 / (C * X.shape[0]))
    return g[:-1], float(g[-1])


def _prox(theta, t):
    out = theta.copy()
    out[:-1] = np.sign(theta[:-1]) * np.maximum(np.abs(theta[:-1]) - t, 0.0)
    return out


def fit_logistic_regression(spec: ClassifierSpec, X, y, seed: int = 0) -> TrainedModel:
    """Stops when the norm of the (proximal) gradient mapping drops below
    ``tol`` or after ``max_iter`` iterations; ``converged`` records which.
    ``solver`` is accepted for compatibility and does not change the
    algorithm."""
    X, y = check_Xy(X, y)
    p = spec.params
    n = X.shape[0]
    s = 2.0 * y - 1.0
    a1, a2 = _weights(p["penalty"], p["l1_ratio"])
    lam1, lam2 = a1 / (p["C"] * n), a2 / (p["C"] * n)

    def total(th, f):
        return f + lam1 * np.abs(th[:-1]).sum()

    theta = np.zeros(X.shape[1] + 1)
    z = theta.copy()
    t = 1.0
    L = 1.0
    f_theta, _ = _smooth(theta, X, s, lam2)
    converged = False
    it = 0
    for it in range(1, p["max_iter"] + 1):
        f_z, g_z = _smooth(z, X, s, lam2)
        L = max(L * 0.8, 1e-12)
        while True:
            cand = _prox(z - g_z / L, lam1 / L)
            d = cand - z
            f_c, _ = _smooth(cand, X, s, lam2)
            if f_c <= f_z + g_z @ d + 0.5 * L * d @ d + 1e-15 * abs(f_z):
                break
            L *= 2.0
        mapping = L * np.linalg.norm(d)
        # restart momentum when the objective goes up
        if total(cand, f_c) > total(theta, f_theta):
            t = 1.0
            z = theta.copy()
            if mapping < p["tol"]:
                converged = True
                break
            continue
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z = cand + ((t - 1.0) / t_next) * (cand - theta)
        theta, f_theta, t = cand, f_c, t_next
        if mapping < p["tol"]:
            converged = True
            break
    state = dict(coef=theta[:-1], intercept=np.float64(theta[-1]),
                 objective=np.float64(total(theta, f_theta)))
    return TrainedModel(spec, state, X.shape[1], seed, converged=converged,
                        info={"iterations": it})


def lr_decision(model: TrainedModel, X):
    X = check_X(X, model.n_features)
    return X @ model.state["coef"] + float(model.state["intercept"])


def predict_lr_score(model: TrainedModel, X):
    return sigmoid(lr_decision(model, X))


def predict_lr(model: TrainedModel, X):
    return (lr_decision(model, X) > 0.0).astype(np.int64)
