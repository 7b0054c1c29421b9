"""Classifier specifications and fitted-model containers."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from ..errors import HyperparameterError

KINDS = ("DT", "RF", "KNN", "NB", "LR", "SVM", "GBT", "MLP")


def _int(lo=None, hi=None, none_ok=False):
    def check(name, v):
        if v is None and none_ok:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
            if isinstance(v, float) and v.is_integer():
                v = int(v)
            else:
                raise HyperparameterError(f"{name} must be an integer, got {v!r}")
        v = int(v)
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            raise HyperparameterError(f"{name}={v} outside [{lo}, {hi}]")
        return v
    return check


def _real(lo=None, hi=None, lo_open=False):
    def check(name, v):
        if isinstance(v, bool) or not isinstance(v, (int, float, np.integer, np.floating)):
            raise HyperparameterError(f"{name} must be a number, got {v!r}")
        v = float(v)
        if not np.isfinite(v):
            raise HyperparameterError(f"{name} must be finite")
        if lo is not None and (v < lo or (lo_open and v == lo)):
            raise HyperparameterError(f"{name}={v} below {'(' if lo_open else '['}{lo}")
        if hi is not None and v > hi:
            raise HyperparameterError(f"{name}={v} above {hi}")
        return v
    return check


def _choice(*options):
    def check(name, v):
        if v not in options:
            raise HyperparameterError(f"{name} must be one of {options}, got {v!r}")
        return v
    return check


def _bool(name, v):
    if not isinstance(v, (bool, np.bool_)):
        raise HyperparameterError(f"{name} must be true/false, got {v!r}")
    return bool(v)


def _max_features(name, v):
    if v is None or v in ("sqrt", "log2"):
        return v
    return _int(lo=1)(name, v)


def _penalty(name, v):
    if v is None or v == "none" or v == "None":
        return None
    return _choice("l1", "l2", "elasticnet")(name, v)


def _gamma(name, v):
    if v in ("scale", "auto"):
        return v
    return _real(lo=0.0, lo_open=True)(name, v)


def _layers(name, v):
    if not isinstance(v, (list, tuple)) or not v:
        raise HyperparameterError(f"{name} must be a non-empty list of widths")
    return tuple(_int(lo=1)(name, w) for w in v)


# name -> (validator, default)
SCHEMA = {
    "DT": {
        "criterion": (_choice("gini", "entropy"), "gini"),
        "max_depth": (_int(lo=0, none_ok=True), None),
        "min_samples_split": (_int(lo=2), 2),
        "min_samples_leaf": (_int(lo=1), 1),
        "max_features": (_max_features, None),
    },
    "RF": {
        "n_estimators": (_int(lo=1), 100),
        "criterion": (_choice("gini", "entropy"), "gini"),
        "max_depth": (_int(lo=0, none_ok=True), None),
        "min_samples_split": (_int(lo=2), 2),
        "min_samples_leaf": (_int(lo=1), 1),
        "max_features": (_max_features, "sqrt"),
        "bootstrap": (_bool, True),
    },
    "KNN": {
        "n_neighbors": (_int(lo=1), 5),
        "weights": (_choice("uniform", "distance"), "uniform"),
        "metric": (_choice("euclidean", "manhattan"), "euclidean"),
    },
    "NB": {
        "var_smoothing": (_real(lo=0.0), 1e-9),
    },
    "LR": {
        "C": (_real(lo=0.0, lo_open=True), 1.0),
        "penalty": (_penalty, "l2"),
        "solver": (_choice("liblinear", "saga", "lbfgs"), "saga"),
        "max_iter": (_int(lo=1), 100),
        "tol": (_real(lo=0.0, lo_open=True), 1e-4),
        "l1_ratio": (_real(lo=0.0, hi=1.0), 0.5),
    },
    "SVM": {
        "C": (_real(lo=0.0, lo_open=True), 1.0),
        "kernel": (_choice("linear", "poly", "rbf", "sigmoid"), "rbf"),
        "gamma": (_gamma, "scale"),
        "degree": (_int(lo=1), 3),
        "coef0": (_real(), 0.0),
        "tol": (_real(lo=0.0, lo_open=True), 1e-3),
        "max_iter": (_int(lo=1), 1_000_000),
    },
    "GBT": {
        "n_estimators": (_int(lo=1), 100),
        "max_depth": (_int(lo=1), 3),
        "learning_rate": (_real(lo=0.0), 0.1),
        "reg_lambda": (_real(lo=0.0), 1.0),
        "min_child_weight": (_real(lo=0.0), 1.0),
    },
    "MLP": {
        "hidden_layers": (_layers, (256, 128, 64, 32)),
        "epochs": (_int(lo=1), 50),
        "batch_size": (_int(lo=1), 32),
        "learning_rate": (_real(lo=0.0, lo_open=True), 1e-3),
        "momentum": (_real(lo=0.0, hi=1.0), 0.9),
        "zero_init_output": (_bool, False),
    },
}

# values some tools write for "unlimited"
_NONE_WORDS = {"None", "none", "null"}


def _normalize(v):
    if isinstance(v, str) and v in _NONE_WORDS:
        return None
    return v


@dataclass(frozen=True)
class ClassifierSpec:
    """A classifier kind plus validated hyperparameters.

    Unknown keys and out-of-range values raise ``HyperparameterError``.
    Missing keys take the per-kind defaults, so ``params`` is always complete.
    """

    kind: str
    params: MappingProxyType = field(default_factory=dict)

    def __post_init__(self):
        kind = str(self.kind).upper()
        if kind not in SCHEMA:
            raise HyperparameterError(f"unknown classifier kind {self.kind!r}; "
                                      f"expected one of {KINDS}")
        schema = SCHEMA[kind]
        given = dict(self.params or {})
        unknown = sorted(set(given) - set(schema))
        if unknown:
            raise HyperparameterError(f"unknown {kind} hyperparameter(s): {', '.join(unknown)}")
        resolved = {}
        for name, (check, default) in schema.items():
            v = _normalize(given[name]) if name in given else default
            resolved[name] = check(name, v) if v is not None or name in given else None
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", MappingProxyType(resolved))

    def __hash__(self):
        return hash((self.kind, json.dumps(self.to_dict()["params"], sort_keys=True)))

    def __eq__(self, other):
        return isinstance(other, ClassifierSpec) and self.to_dict() == other.to_dict()

    def replace(self, **changes) -> "ClassifierSpec":
        return ClassifierSpec(self.kind, {**self.params, **changes})

    def to_dict(self) -> dict:
        params = {k: list(v) if isinstance(v, tuple) else v for k, v in self.params.items()}
        return {"kind": self.kind, "params": params}

    @classmethod
    def from_dict(cls, d) -> "ClassifierSpec":
        extra = set(d) - {"kind", "params"}
        if extra:
            raise HyperparameterError(f"unknown classifier spec key(s): {sorted(extra)}")
        return cls(d["kind"], d.get("params", {}))


@dataclass(frozen=True, eq=False)
class TrainedModel:
    """Fitted state of one classifier.

    ``state`` maps names to read-only arrays. ``classes`` is always
    ``(0, 1)``, i.e. (Early, Late).
    """

    spec: ClassifierSpec
    state: MappingProxyType
    n_features: int
    seed: int
    converged: bool = True
    info: MappingProxyType = field(default_factory=dict)
    classes: tuple = (0, 1)

    def __post_init__(self):
        frozen = {}
        for k, v in dict(self.state).items():
            a = np.array(v, copy=True)
            a.setflags(write=False)
            frozen[k] = a
        object.__setattr__(self, "state", MappingProxyType(frozen))
        object.__setattr__(self, "info", MappingProxyType(dict(self.info or {})))
