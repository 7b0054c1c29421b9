"""Kernel C-SVM trained by sequential minimal optimization.

Solves the dual

    min_a  0.5 a'Qa - sum(a)   s.t.  0 <= a_i <= C,  y'a = 0,

with ``Q_ij = y_i y_j K(x_i, x_j)``, choosing working pairs by maximal
violation for i and second-order gain for j.
"""

import numpy as np
from numba import njit

from ._common import check_X, check_Xy
from .spec import ClassifierSpec, TrainedModel

_TAU = 1e-12


def resolve_gamma(gamma, X):
    if gamma == "scale":
        v = X.var()
        return 1.0 / (X.shape[1] * v) if v > 0 else 1.0
    if gamma == "auto":
        return 1.0 / X.shape[1]
    return float(gamma)


def kernel_matrix(A, B, kernel, gamma, degree=3, coef0=0.0):
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if kernel == "rbf":
        sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * A @ B.T
        return np.exp(-gamma * np.maximum(sq, 0.0))
    dot = A @ B.T
    if kernel == "linear":
        return dot
    if kernel == "poly":
        return (gamma * dot + coef0) ** degree
    if kernel == "sigmoid":
        return np.tanh(gamma * dot + coef0)
    raise ValueError(f"unknown kernel {kernel!r}")


@njit(cache=True)
def _smo(K, y, C, tol, max_iter):
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    it = 0
    converged = False
    while it < max_iter:
        # i: most violating index in I_up
        gmax = -np.inf
        i = -1
        for t in range(n):
            if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                v = -y[t] * G[t]
                if v > gmax:
                    gmax = v
                    i = t
        # j: best second-order gain in I_low; track min for the stop test
        gmin = np.inf
        j = -1
        best = np.inf
        for t in range(n):
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                v = -y[t] * G[t]
                if v < gmin:
                    gmin = v
                if i >= 0:
                    b = gmax - v
                    if b > 0:
                        a = K[i, i] + K[t, t] - 2.0 * K[i, t]
                        if a <= 0:
                            a = _TAU
                        obj = -b * b / a
                        if obj < best:
                            best = obj
                            j = t
        if i < 0 or j < 0 or gmax - gmin < tol:
            converged = True
            break
        it += 1
        ai_old = alpha[i]
        aj_old = alpha[j]
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad <= 0:
            quad = _TAU
        if y[i] != y[j]:
            delta = (-G[i] - G[j]) / quad
            diff = ai_old - aj_old
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            delta = (G[i] - G[j]) / quad
            total = ai_old + aj_old
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total
        dai = alpha[i] - ai_old
        daj = alpha[j] - aj_old
        for t in range(n):
            G[t] += y[t] * (y[i] * K[t, i] * dai + y[j] * K[t, j] * daj)

    # rho: average over free vectors, else midpoint of the feasible interval
    ub = np.inf
    lb = -np.inf
    s = 0.0
    n_free = 0
    for t in range(n):
        yg = y[t] * G[t]
        if alpha[t] >= C:
            if y[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            n_free += 1
            s += yg
    rho = s / n_free if n_free > 0 else 0.5 * (ub + lb)
    return alpha, -rho, it, converged


def dual_objective(alpha, y, K):
    """``0.5 a'Qa - sum(a)`` for labels ``y`` in {-1, +1}."""
    v = alpha * y
    return 0.5 * v @ K @ v - alpha.sum()


def fit_svm(spec: ClassifierSpec, X, y, seed: int = 0) -> TrainedModel:
    X, y = check_Xy(X, y)
    p = spec.params
    gamma = resolve_gamma(p["gamma"], X)
    K = kernel_matrix(X, X, p["kernel"], gamma, p["degree"], p["coef0"])
    s = 2.0 * y - 1.0
    alpha, b, it, converged = _smo(K, s, p["C"], p["tol"], p["max_iter"])
    sv = alpha > 0
    state = dict(support_vectors=X[sv], dual_coef=(alpha * s)[sv], intercept=np.float64(b),
                 gamma=np.float64(gamma), alpha=alpha, support=np.flatnonzero(sv),
                 objective=np.float64(dual_objective(alpha, s, K)))
    return TrainedModel(spec, state, X.shape[1], seed, converged=bool(converged),
                        info={"iterations": int(it)})


def svm_decision(model: TrainedModel, X):
    """``sum_i a_i y_i K(x_i, x) + b``."""
    X = check_X(X, model.n_features)
    s, p = model.state, model.spec.params
    if s["support_vectors"].shape[0] == 0:
        return np.full(X.shape[0], float(s["intercept"]))
    K = kernel_matrix(X, s["support_vectors"], p["kernel"], float(s["gamma"]),
                      p["degree"], p["coef0"])
    return K @ s["dual_coef"] + float(s["intercept"])


def predict_svm(model: TrainedModel, X):
    return (svm_decision(model, X) > 0.0).astype(np.int64)
