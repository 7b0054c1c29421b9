"""k-nearest-neighbour classifier."""

import numpy as np

from ._common import check_X, check_Xy
from .spec import ClassifierSpec, TrainedModel

_BLOCK = 2_000_000  # elements per distance block


def pairwise_distances(A, B, metric):
    """Exact row-by-row distances (no Gram-matrix shortcut), so equal
    inputs give bit-identical distances regardless of block layout."""
    out = np.empty((A.shape[0], B.shape[0]))
    step = max(1, _BLOCK // max(1, B.size))
    for s in range(0, A.shape[0], step):
        diff = A[s:s + step, None, :] - B[None, :, :]
        if metric == "euclidean":
            out[s:s + step] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        else:
            out[s:s + step] = np.abs(diff).sum(axis=2)
    return out


def fit_knn(spec: ClassifierSpec, X, y, seed: int = 0) -> TrainedModel:
    X, y = check_Xy(X, y)
    return TrainedModel(spec, dict(X=X, y=y), X.shape[1], seed)


def _class_scores(model, X):
    """Per-row (Early score, Late score, label of nearest neighbour)."""
    X = check_X(X, model.n_features)
    p = model.spec.params
    Xt, yt = model.state["X"], model.state["y"]
    k = min(p["n_neighbors"], Xt.shape[0])
    d = pairwise_distances(X, Xt, p["metric"])
    # stable sort: equidistant neighbours are taken in training order
    nn = np.argsort(d, axis=1, kind="stable")[:, :k]
    dn = np.take_along_axis(d, nn, axis=1)
    labels = yt[nn]
    if p["weights"] == "uniform":
        w = np.ones_like(dn)
    else:
        exact = dn == 0.0
        with np.errstate(divide="ignore"):
            w = np.where(exact.any(axis=1, keepdims=True), exact.astype(float), 1.0 / dn)
    # accumulate nearest-first so exact vote ties are reproducible
    late = np.zeros(X.shape[0])
    early = np.zeros(X.shape[0])
    for j in range(k):
        late += np.where(labels[:, j] == 1, w[:, j], 0.0)
        early += np.where(labels[:, j] == 0, w[:, j], 0.0)
    return early, late, labels[:, 0]


def predict_knn(model: TrainedModel, X):
    """Weighted vote of the k nearest training rows. Exact matches (d = 0)
    outvote everything under distance weighting; a tied vote goes to the
    nearest neighbour's class."""
    early, late, nearest = _class_scores(model, X)
    return np.where(late > early, 1, np.where(early > late, 0, nearest)).astype(np.int64)


def predict_knn_score(model: TrainedModel, X):
    early, late, _ = _class_scores(model, X)
    return late / (early + late)
