"""Eight binary classifiers behind one ``fit`` / ``predict`` interface.

Labels are integers, 0 = Early and 1 = Late.

>>> spec = ClassifierSpec("KNN", {"n_neighbors": 3})
>>> model = fit(spec, X_train, y_train, seed=0)      # doctest: +SKIP
>>> predict(model, X_test)                            # doctest: +SKIP
"""

import json

import numpy as np

from .._npz import save_npz
from ..errors import DataValidationError
from .knn import fit_knn, predict_knn, predict_knn_score
from .linear import fit_logistic_regression, predict_lr, predict_lr_score
from .mlp import fit_mlp, mlp_param_count, predict_mlp, predict_mlp_score
from .nb import fit_gaussian_nb, predict_nb, predict_nb_score
from .spec import KINDS, ClassifierSpec, TrainedModel
from .svm import fit_svm, predict_svm, svm_decision
from .trees import (fit_gbt, fit_tree, fit_tree_family, predict_gbt, predict_gbt_score,
                    predict_tree, predict_tree_score)

MODEL_FORMAT = "stageml.model/1"

_FIT = {
    "DT": fit_tree, "RF": fit_tree, "KNN": fit_knn, "NB": fit_gaussian_nb,
    "LR": fit_logistic_regression, "SVM": fit_svm, "GBT": fit_gbt, "MLP": fit_mlp,
}
_PREDICT = {
    "DT": predict_tree, "RF": predict_tree, "KNN": predict_knn, "NB": predict_nb,
    "LR": predict_lr, "SVM": predict_svm, "GBT": predict_gbt, "MLP": predict_mlp,
}
_SCORE = {
    "DT": predict_tree_score, "RF": predict_tree_score, "KNN": predict_knn_score,
    "NB": predict_nb_score, "LR": predict_lr_score, "SVM": svm_decision,
    "GBT": predict_gbt_score, "MLP": predict_mlp_score,
}


def fit(spec: ClassifierSpec, X, y, seed: int = 0) -> TrainedModel:
    return _FIT[spec.kind](spec, X, y, seed)


def fit_many(specs, X, y, seed: int = 0) -> list:
    """Fit several specs on the same data. Tree specs share growth work
    (see :func:`fit_tree_family`); the results equal individual fits."""
    out = [None] * len(specs)
    trees = [i for i, s in enumerate(specs) if s.kind in ("DT", "RF")]
    if trees:
        for i, m in zip(trees, fit_tree_family([specs[i] for i in trees], X, y, seed)):
            out[i] = m
    for i, s in enumerate(specs):
        if out[i] is None:
            out[i] = fit(s, X, y, seed)
    return out


def predict(model: TrainedModel, X) -> np.ndarray:
    return _PREDICT[model.spec.kind](model, X)


def predict_score(model: TrainedModel, X) -> np.ndarray:
    """Higher means more Late. Probabilities for LR, NB, MLP and GBT, vote
    fractions for trees and KNN, the decision value for SVM."""
    return _SCORE[model.spec.kind](model, X)


def dump_model(model: TrainedModel, path):
    """Write ``.npz`` holding the state arrays plus a JSON header."""
    meta = {"format": MODEL_FORMAT, "spec": model.spec.to_dict(), "seed": int(model.seed),
            "n_features": int(model.n_features), "converged": bool(model.converged),
            "info": dict(model.info), "state_keys": sorted(model.state)}
    save_npz(path, __meta__=np.array(json.dumps(meta, sort_keys=True)),
             **{f"s_{k}": v for k, v in model.state.items()})


def load_model(path) -> TrainedModel:
    with np.load(path, allow_pickle=False) as z:
        if "__meta__" not in z:
            raise DataValidationError(f"{path} is not a model file")
        meta = json.loads(str(z["__meta__"]))
        if meta.get("format") != MODEL_FORMAT:
            raise DataValidationError(f"unsupported model format {meta.get('format')!r}")
        state = {k: z[f"s_{k}"] for k in meta["state_keys"]}
    return TrainedModel(ClassifierSpec.from_dict(meta["spec"]), state, meta["n_features"],
                        meta["seed"], meta["converged"], meta["info"])


__all__ = [
    "KINDS", "ClassifierSpec", "TrainedModel", "fit", "fit_many", "predict",
    "predict_score", "dump_model", "load_model", "mlp_param_count", "fit_tree_family",
]
