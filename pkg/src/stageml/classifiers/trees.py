"""Decision tree, random forest and gradient-boosted trees."""

from __future__ import annotations

import math
from collections import defaultdict

import numpy as np

from . import _tree
from ._common import check_X, check_Xy, logistic_loss, sigmoid, sub_seeds
from .spec import ClassifierSpec, TrainedModel

_CRITERIA = {"gini": _tree.GINI, "entropy": _tree.ENTROPY}


def resolve_max_features(value, p):
    if value is None:
        return p
    if value == "sqrt":
        return max(1, int(math.sqrt(p)))
    if value == "log2":
        return max(1, int(math.log2(p))) if p > 1 else 1
    return min(int(value), p)


def _depth(value):
    return -1 if value is None else int(value)


def _flatten(trees):
    """Concatenate per-tree node arrays; child ids stay tree-local."""
    sizes = [t[0].shape[0] for t in trees]
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
    cols = [np.concatenate([t[j] for t in trees]) for j in range(len(trees[0]))]
    return cols, offsets


def _forest_model(spec, trees, n_features, seed):
    (feature, threshold, left, right, value, n_node), offsets = _flatten(trees)
    state = dict(feature=feature, threshold=threshold, left=left, right=right,
                 value=value, n_node=n_node, offsets=offsets)
    return TrainedModel(spec, state, n_features, seed)


def _grow(spec, ranks, y, n_estimators, max_depth, min_samples_split, seed):
    rank_t, uvals = ranks
    p = spec.params
    bootstrap = p["bootstrap"] if spec.kind == "RF" else False
    out = _tree.build_forest(
        rank_t, uvals, y, n_estimators, bootstrap, _CRITERIA[p["criterion"]],
        max_depth, min_samples_split, p["min_samples_leaf"],
        resolve_max_features(p["max_features"], rank_t.shape[0]),
        sub_seeds(seed, n_estimators))
    arrays, counts = out[:6], out[6]
    return [tuple(a[t, :counts[t]].copy() for a in arrays) for t in range(n_estimators)]


def _ranks(X):
    rank_t, uvals, _ = _tree.dense_ranks(X)
    return rank_t, uvals


def fit_tree(spec: ClassifierSpec, X, y, seed: int = 0) -> TrainedModel:
    """Fit a DT or RF spec. A DT is a one-tree forest without bootstrap."""
    X, y = check_Xy(X, y)
    p = spec.params
    n_est = p["n_estimators"] if spec.kind == "RF" else 1
    trees = _grow(spec, _ranks(X), y.astype(np.float64), n_est, _depth(p["max_depth"]),
                  p["min_samples_split"], seed)
    return _forest_model(spec, trees, X.shape[1], seed)


def _family_key(spec):
    p = dict(spec.params)
    for k in ("n_estimators", "max_depth", "min_samples_split"):
        p.pop(k, None)
    return spec.kind, tuple(sorted(p.items()))


def fit_tree_family(specs, X, y, seed: int = 0) -> list:
    """Fit many DT/RF specs that differ in ``n_estimators``, ``max_depth`` or
    ``min_samples_split`` at the cost of one forest per remaining setting.

    Each result equals ``fit_tree(spec, X, y, seed)`` exactly: trees are
    seeded by position, so a smaller forest is a prefix of a larger one, and
    a tighter depth or split limit is a truncation of a looser tree.
    """
    X, y = check_Xy(X, y)
    ranks = _ranks(X)
    yf = y.astype(np.float64)
    groups = defaultdict(list)
    for i, s in enumerate(specs):
        groups[_family_key(s)].append(i)
    out = [None] * len(specs)
    for members in groups.values():
        group = [specs[i] for i in members]
        n_est = max(s.params.get("n_estimators", 1) if s.kind == "RF" else 1 for s in group)
        depths = [_depth(s.params["max_depth"]) for s in group]
        loose_depth = -1 if -1 in depths else max(depths)
        loose_mss = min(s.params["min_samples_split"] for s in group)
        base = _grow(group[0], ranks, yf, n_est, loose_depth, loose_mss, seed)
        cut_cache = {}
        for i, s in zip(members, group):
            cut = (_depth(s.params["max_depth"]), s.params["min_samples_split"])
            if cut == (loose_depth, loose_mss):
                trees = base
            else:
                if cut not in cut_cache:
                    cut_cache[cut] = []
                trees = cut_cache[cut]
                k = s.params["n_estimators"] if s.kind == "RF" else 1
                while len(trees) < k:
                    trees.append(_tree.truncate_tree(*base[len(trees)], cut[0], cut[1]))
            k = s.params["n_estimators"] if s.kind == "RF" else 1
            out[i] = _forest_model(s, trees[:k], X.shape[1], seed)
    return out


def _tree_arrays(model):
    s = model.state
    return s["feature"], s["threshold"], s["left"], s["right"], s["value"], s["offsets"]


def predict_tree_score(model: TrainedModel, X):
    """Fraction of trees voting Late (DT: the leaf's Late fraction)."""
    X = check_X(X, model.n_features)
    feature, threshold, left, right, value, offsets = _tree_arrays(model)
    if offsets.shape[0] == 1:
        return value[_tree.apply_tree(X, feature, threshold, left, right, 0)]
    votes = _tree.forest_votes(X, feature, threshold, left, right, value, offsets)
    return votes / offsets.shape[0]


def predict_tree(model: TrainedModel, X):
    """Majority vote; a tied vote (or a 50/50 leaf) goes to Early."""
    return (predict_tree_score(model, X) > 0.5).astype(np.int64)


def apply(model: TrainedModel, X):
    """Leaf id reached in each tree, shape (n_rows, n_trees)."""
    X = check_X(X, model.n_features)
    feature, threshold, left, right, _, offsets = _tree_arrays(model)
    return np.stack([_tree.apply_tree(X, feature, threshold, left, right, o) - o
                     for o in offsets], axis=1)


# ---------------------------------------------------------------------------
# gradient boosting


def fit_gbt(spec: ClassifierSpec, X, y, seed: int = 0) -> TrainedModel:
    """Boosted regression trees on the logistic loss.

    Each round fits a tree to the gradient ``p - y`` and hessian
    ``p (1 - p)`` of the current margin; leaves hold ``-G / (H + lambda)``
    scaled by the learning rate. The margin starts at the log-odds of the
    training prevalence. ``state["train_loss"]`` has the mean log-loss
    before the first round and after each round.
    """
    X, y = check_Xy(X, y)
    p = spec.params
    rank_t, uvals = _ranks(X)
    prevalence = y.mean()
    base = math.log(prevalence / (1.0 - prevalence))
    margin = np.full(X.shape[0], base)
    lr = p["learning_rate"]
    trees = []
    losses = [logistic_loss(margin, y)]
    for _ in range(p["n_estimators"]):
        prob = sigmoid(margin)
        grad = prob - y
        hess = prob * (1.0 - prob)
        feature, threshold, left, right, weight = _tree.grow_regression_tree(
            rank_t, uvals, grad, hess, p["max_depth"], p["min_child_weight"], p["reg_lambda"])
        weight = weight * lr
        leaves = _tree.apply_tree(X, feature, threshold, left, right, 0)
        margin = margin + weight[leaves]
        trees.append((feature, threshold, left, right, weight))
        losses.append(logistic_loss(margin, y))
    (feature, threshold, left, right, weight), offsets = _flatten(trees)
    state = dict(feature=feature, threshold=threshold, left=left, right=right, value=weight,
                 offsets=offsets, base_score=np.float64(base), train_loss=np.array(losses))
    return TrainedModel(spec, state, X.shape[1], seed)


def gbt_margin(model: TrainedModel, X):
    X = check_X(X, model.n_features)
    feature, threshold, left, right, value, offsets = _tree_arrays(model)
    return float(model.state["base_score"]) + _tree.forest_margin(
        X, feature, threshold, left, right, value, offsets)


def predict_gbt_score(model: TrainedModel, X):
    return sigmoid(gbt_margin(model, X))


def predict_gbt(model: TrainedModel, X):
    return (gbt_margin(model, X) > 0.0).astype(np.int64)
