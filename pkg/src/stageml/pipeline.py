"""Configuration-driven staged pipeline with a leakage guard.

Stages run in a fixed order:

    log2(x + 1) -> standardize -> select_fpr -> pca | ica -> augmentation -> classifier

The log transform is stateless and applied to every row. Every other stage
is fitted on training rows only; asking a stage to fit on a row that is
held out for testing raises :class:`~stageml.errors.LeakageError`.
"""

from __future__ import annotations

import copy
import hashlib
import json
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import augment as aug
from .classifiers import ClassifierSpec, fit, predict
from .data import LabeledDataset, load_dataset, split_indices
from .errors import ConfigError, DataValidationError, LeakageError, StagemlError
from .evaluation import (GridSpec, DEFAULT_GRIDS, TrialSummary, confusion, grid_search,
                         kfold, metrics, weighted_f1)
from .selection import FprSelector
from .transform import fit_standardizer, ica_fit, pca_fit

# stream ids for seed derivation
SPLIT, GRID, CLASSIFIER, SMOTE, ICA, NOISE, SFA, CV = range(1, 9)


def derive_seed(master: int, *keys: int) -> int:
    """Independent 32-bit seed for the stream named by ``keys``."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1)[0])


# ---------------------------------------------------------------------------
# configuration

_STRICT = {"additionalProperties": False}

CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    **_STRICT,
    "properties": {
        "input": {
            "type": "object", **_STRICT,
            "required": ["matrix", "labels"],
            "properties": {
                "matrix": {"type": "string"},
                "labels": {"type": "string"},
                "delimiter": {"type": "string", "minLength": 1},
                "orientation": {"enum": ["samples_as_rows", "genes_as_rows"]},
                "drop_unlabeled": {"type": "boolean"},
            },
        },
        "log_transform": {"type": "boolean"},
        "deg": {
            "type": "object", **_STRICT,
            "properties": {
                "enabled": {"type": "boolean"},
                "alpha": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "lfc_threshold": {"type": "number", "minimum": 0},
                "variant": {"enum": ["pooled", "welch"]},
                "pseudocount": {"type": "number", "minimum": 0},
            },
        },
        "standardize": {"type": "boolean"},
        "selection": {
            "type": "object", **_STRICT,
            "properties": {
                "method": {"enum": ["none", "select_fpr"]},
                "alpha": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "score_func": {"enum": ["f_classif"]},
            },
        },
        "transform": {
            "type": "object", **_STRICT,
            "properties": {
                "method": {"enum": ["none", "pca", "ica"]},
                "n_components": {"type": "integer", "minimum": 1},
                "max_iter": {"type": "integer", "minimum": 1},
                "tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "augmentation": {
            "type": "object", **_STRICT,
            "properties": {
                "method": {"enum": ["none", "smote", "sfa", "gaussian"]},
                "k_neighbors": {"type": "integer", "minimum": 1},
                "target": {"anyOf": [{"const": "balance"},
                                     {"type": "number", "exclusiveMinimum": 0}]},
                "mu": {"type": "number"},
                "sigma": {"type": "number", "minimum": 0},
                "sigma1": {"type": "number", "minimum": 0},
                "sigma2": {"type": "number", "minimum": 0},
                "relative": {"type": "boolean"},
                "factor": {"type": "integer", "minimum": 1},
            },
        },
        "classifiers": {
            "type": "array", "minItems": 1,
            "items": {
                "type": "object", **_STRICT,
                "required": ["kind"],
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "kind": {"enum": ["DT", "RF", "KNN", "NB", "LR", "SVM", "GBT", "MLP"]},
                    "params": {"type": "object"},
                    "grid": {"anyOf": [{"const": "builtin"},
                                       {"type": "object",
                                        "additionalProperties": {"type": "array",
                                                                 "minItems": 1}}]},
                },
            },
        },
        "evaluation": {
            "type": "object", **_STRICT,
            "properties": {
                "test_fraction": {"type": "number", "exclusiveMinimum": 0,
                                  "exclusiveMaximum": 1},
                "stratified": {"type": "boolean"},
                "n_runs": {"type": "integer", "minimum": 1},
                "cv_folds": {"type": "integer", "minimum": 2},
                "cv_k": {"type": "integer", "minimum": 2},
                "run_trials": {"type": "boolean"},
                "run_cv": {"type": "boolean"},
            },
        },
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string"},
    },
    "required": ["input", "classifiers"],
}

DEFAULTS = {
    "log_transform": False,
    "deg": {"enabled": False, "alpha": 0.05, "lfc_threshold": 1.0, "variant": "pooled",
            "pseudocount": 1e-9},
    "standardize": True,
    "selection": {"method": "none", "alpha": 0.05, "score_func": "f_classif"},
    "transform": {"method": "none", "n_components": 100, "max_iter": 200, "tol": 1e-4},
    "augmentation": {"method": "none", "k_neighbors": 5, "target": "balance", "mu": 0.0,
                     "sigma": 0.01, "sigma1": 0.01, "sigma2": 0.01, "relative": True,
                     "factor": 10},
    "evaluation": {"test_fraction": 0.2, "stratified": True, "n_runs": 100, "cv_folds": 5,
                   "cv_k": 10, "run_trials": True, "run_cv": False},
    "seed": 0,
}


def _merge(defaults, given):
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _validate(doc):
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from None


@dataclass(frozen=True, eq=False)
class PipelineConfig:
    """A schema-validated, defaults-resolved pipeline configuration.

    ``resolved`` is the complete configuration actually run; it is written
    verbatim next to every output, and ``sha256`` hashes its canonical JSON.
    """

    resolved: dict
    base_dir: Path = field(default_factory=Path)

    @classmethod
    def from_dict(cls, doc, base_dir=".", overrides=None) -> "PipelineConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        _validate(doc)
        resolved = _merge(DEFAULTS, doc)
        for k, v in (overrides or {}).items():
            resolved = _merge(resolved, _nest(k, v))
        _validate(resolved)
        cfg = cls(resolved, Path(base_dir))
        cfg.classifier_entries()
        return cfg

    @classmethod
    def from_file(cls, path, overrides=None) -> "PipelineConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(doc, path.parent, overrides)

    def __getitem__(self, key):
        return self.resolved[key]

    def canonical_json(self) -> str:
        return json.dumps(self.resolved, sort_keys=True, indent=2) + "\n"

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    @property
    def seed(self) -> int:
        return int(self.resolved["seed"])

    def input_path(self, key) -> Path:
        p = Path(self.resolved["input"][key])
        return p if p.is_absolute() else self.base_dir / p

    def classifier_entries(self) -> list:
        """``(name, spec_or_grid)`` pairs; grids are :class:`GridSpec`."""
        out, seen = [], set()
        folds = self.resolved["evaluation"]["cv_folds"]
        for entry in self.resolved["classifiers"]:
            name = entry.get("name", entry["kind"])
            if name in seen:
                raise ConfigError(f"duplicate classifier name {name!r}; set 'name'")
            seen.add(name)
            params = entry.get("params", {})
            grid = entry.get("grid")
            try:
                if grid is None:
                    out.append((name, ClassifierSpec(entry["kind"], params)))
                else:
                    if grid == "builtin":
                        if entry["kind"] not in DEFAULT_GRIDS:
                            raise ConfigError(f"no builtin grid for {entry['kind']}")
                        grid = DEFAULT_GRIDS[entry["kind"]]
                    out.append((name, GridSpec(entry["kind"], grid, folds, params)))
            except StagemlError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"classifier {name!r}: {exc}") from None
        return out


def _nest(dotted, value):
    keys = dotted.split(".")
    out = value
    for k in reversed(keys):
        out = {k: out}
    return out


# ---------------------------------------------------------------------------
# leakage guard and fitted preprocessing


class LeakageGuard:
    """Rows (by original index) that no fit-type stage may see."""

    def __init__(self, held_out=()):
        self.held_out = frozenset(int(i) for i in held_out)

    def check(self, rows, stage):
        if not self.held_out:
            return
        bad = self.held_out.intersection(int(i) for i in rows)
        if bad:
            raise LeakageError(f"stage {stage!r} would be fitted on {len(bad)} held-out "
                               f"row(s), e.g. row {min(bad)}")


@dataclass
class FittedPreprocessor:
    """Fitted feature stages; ``transform`` maps raw rows to model inputs."""

    stages: list
    notes: list = field(default_factory=list)

    def transform(self, X):
        for _, apply_fn in self.stages:
            X = apply_fn(X)
        return X


def fit_preprocessor(cfg: PipelineConfig, X, y, rows, guard: LeakageGuard, seed: int):
    """Fit standardize / select / transform on ``X`` (whose original row
    indices are ``rows``) and run augmentation on the result.

    Returns ``(preprocessor, X_train, y_train)`` with augmented training data.
    """
    r = cfg.resolved
    notes = []
    stages = []
    Z = X
    if r["standardize"]:
        guard.check(rows, "standardize")
        model = fit_standardizer(Z)
        stages.append(("standardize", model.transform))
        Z = model.transform(Z)
    sel = r["selection"]
    if sel["method"] == "select_fpr":
        guard.check(rows, "select_fpr")
        selector = FprSelector(sel["alpha"], sel["score_func"]).fit(Z, y)
        stages.append(("select_fpr", selector.transform))
        Z = selector.transform(Z)
    tr = r["transform"]
    if tr["method"] != "none":
        guard.check(rows, tr["method"])
        k = tr["n_components"]
        k_max = min(Z.shape[0] - 1, Z.shape[1])
        if k > k_max:
            notes.append(f"{tr['method']} n_components clamped from {k} to {k_max}")
            k = k_max
        if tr["method"] == "pca":
            model = pca_fit(Z, k)
        else:
            model = ica_fit(Z, k, tr["max_iter"], tr["tol"], derive_seed(seed, ICA))
            if not model.converged:
                notes.append("ica did not converge")
        stages.append((tr["method"], model.transform))
        Z = model.transform(Z)

    a = r["augmentation"]
    X_tr, y_tr = Z, np.asarray(y)
    if a["method"] != "none":
        guard.check(rows, a["method"])
    if a["method"] == "smote":
        params = aug.SmoteParams(a["k_neighbors"], a["target"], derive_seed(seed, SMOTE))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", aug.AugmentWarning)
            X_tr, y_tr, _, msgs = aug.smote_arrays(Z, y, params)
        notes.extend(msgs)
    elif a["method"] == "gaussian":
        params = aug.NoiseParams(a["mu"], a["sigma"], a["relative"], a["factor"])
        X_tr, y_tr, _ = aug.gaussian_expand_arrays(Z, y, params, derive_seed(seed, NOISE))
    elif a["method"] == "sfa":
        params = aug.SFAParams(a["mu"], a["sigma1"], a["sigma2"])
        copies = [aug.sfa(Z, params, derive_seed(seed, SFA, j)) for j in range(1, a["factor"])]
        X_tr = np.vstack([Z, *copies])
        y_tr = np.tile(np.asarray(y), a["factor"])
    return FittedPreprocessor(stages, notes), X_tr, y_tr


def _apply_log(cfg, X):
    return np.log2(X + 1.0) if cfg.resolved["log_transform"] else X


# ---------------------------------------------------------------------------
# one train/test evaluation


@dataclass(frozen=True, eq=False)
class RunOutcome:
    name: str
    spec: ClassifierSpec
    confusion: object
    report: object
    grid: object = None
    notes: tuple = ()


def evaluate_split(cfg: PipelineConfig, X, y, train, test, seed: int) -> list:
    """Fit every configured classifier on ``train`` rows and score it on
    ``test`` rows. Grids are searched with folds inside ``train``."""
    guard = LeakageGuard(test)
    X_tr_raw, y_tr_raw = X[train], y[train]
    entries = cfg.classifier_entries()
    folds = None
    if any(isinstance(e, GridSpec) for _, e in entries):
        folds = kfold(len(train), cfg.resolved["evaluation"]["cv_folds"], stratified=True,
                      shuffle=True, seed=derive_seed(seed, GRID), y=y_tr_raw)
    cache = {}

    def prep(f):
        """Preprocessing fitted on grid fold ``f`` of the training rows, or
        on all training rows for ``f = -1``; shared by all classifiers."""
        if f not in cache:
            rows = train if f < 0 else train[folds[f][0]]
            cache[f] = fit_preprocessor(cfg, X[rows], y[rows], rows, guard,
                                        derive_seed(seed, GRID, f + 1))
        return cache[f]

    def preprocess(Xa, ya, Xb, f):
        fitted, Xt, yt = prep(f)
        return Xt, yt, fitted.transform(Xb)

    outcomes = []
    for idx, (name, entry) in enumerate(entries):
        clf_seed = derive_seed(seed, CLASSIFIER, idx)
        grid_res = None
        if isinstance(entry, GridSpec):
            grid_res = grid_search(entry, X_tr_raw, y_tr_raw, clf_seed, preprocess,
                                   refit=True, folds=folds)
            spec, model = grid_res.best_spec, grid_res.best_model
        else:
            spec = entry
            _, Xt, yt = prep(-1)
            model = fit(spec, Xt, yt, clf_seed)
        fitted, _, _ = prep(-1)
        y_hat = predict(model, fitted.transform(X[test]))
        cm = confusion(y[test], y_hat)
        notes = tuple(fitted.notes) + (() if model.converged else (f"{name} did not converge",))
        outcomes.append(RunOutcome(name, spec, cm, metrics(cm), grid_res, notes))
    return outcomes


def _load(cfg: PipelineConfig):
    inp = cfg.resolved["input"]
    ds = load_dataset(cfg.input_path("matrix"), cfg.input_path("labels"),
                      inp.get("delimiter", "\t"), inp.get("orientation", "samples_as_rows"),
                      log_transform=False, drop_unlabeled=inp.get("drop_unlabeled", False))
    return ds


# ---------------------------------------------------------------------------
# repeated trials and cross-validation


@dataclass(frozen=True, eq=False)
class TrialsResult:
    summaries: dict
    runs: tuple  # one list of RunOutcome per run


def repeated_trials(cfg: PipelineConfig, dataset: LabeledDataset = None, n_runs=None,
                    seed=None) -> TrialsResult:
    """Re-split, refit and re-score ``n_runs`` times. Run r uses seeds
    derived from (master seed, r), so runs are independent and repeatable."""
    dataset = dataset if dataset is not None else _load(cfg)
    ev = cfg.resolved["evaluation"]
    n_runs = ev["n_runs"] if n_runs is None else int(n_runs)
    seed = cfg.seed if seed is None else int(seed)
    if n_runs < 1:
        raise ConfigError("n_runs must be >= 1")
    X = _apply_log(cfg, dataset.X)
    y = dataset.y
    runs = []
    for r in range(n_runs):
        run_seed = derive_seed(seed, r)
        try:
            train, test = split_indices(y, ev["test_fraction"], ev["stratified"],
                                        derive_seed(run_seed, SPLIT))
            runs.append(evaluate_split(cfg, X, y, train, test, run_seed))
        except StagemlError as exc:
            raise type(exc)(f"run {r}: {exc}") from exc
    names = [o.name for o in runs[0]]
    summaries = {name: TrialSummary.from_reports(name, [run[i].report for run in runs])
                 for i, name in enumerate(names)}
    return TrialsResult(summaries, tuple(runs))


@dataclass(frozen=True, eq=False)
class CVResult:
    """Weighted F1 (percent) per fold for each classifier."""

    fold_f1: dict
    folds: tuple

    @property
    def mean(self):
        return {k: float(np.mean(v)) for k, v in self.fold_f1.items()}

    @property
    def best(self):
        return {k: float(np.max(v)) for k, v in self.fold_f1.items()}


def cross_validate(cfg: PipelineConfig, dataset: LabeledDataset = None, k=None,
                   seed=None) -> CVResult:
    """Stratified k-fold evaluation of the whole pipeline; every fit-type
    stage is refitted inside each training fold."""
    dataset = dataset if dataset is not None else _load(cfg)
    k = cfg.resolved["evaluation"]["cv_k"] if k is None else int(k)
    seed = cfg.seed if seed is None else int(seed)
    X = _apply_log(cfg, dataset.X)
    y = dataset.y
    folds = kfold(len(y), k, stratified=True, shuffle=True, seed=derive_seed(seed, CV), y=y)
    per = {}
    for f, (train, test) in enumerate(folds):
        try:
            outcomes = evaluate_split(cfg, X, y, train, test, derive_seed(seed, CV, f))
        except StagemlError as exc:
            raise type(exc)(f"fold {f}: {exc}") from exc
        for o in outcomes:
            per.setdefault(o.name, []).append(o.report.weighted["f1"])
    return CVResult({k_: tuple(v) for k_, v in per.items()}, tuple(folds))


def leaky_cv_score(cfg: PipelineConfig, dataset: LabeledDataset, k: int = 5, seed: int = 0):
    """Demonstrates the leak the guard forbids: preprocessing is fitted once
    on *all* rows, then only the classifier is cross-validated.

    Returns ``(guarded_error, leaky_mean_f1)`` where ``guarded_error`` is the
    :class:`LeakageError` raised when the same fit is attempted through the
    guarded path. Used by tests; not part of the normal workflow.
    """
    X = _apply_log(cfg, dataset.X)
    y = dataset.y
    folds = kfold(len(y), k, stratified=True, shuffle=True, seed=seed, y=y)
    _, test0 = folds[0]
    rows = np.arange(len(y))
    try:
        fit_preprocessor(cfg, X, y, rows, LeakageGuard(test0), seed)
        guarded = None
    except LeakageError as exc:
        guarded = exc
    fitted, _, _ = fit_preprocessor(cfg, X, y, rows, LeakageGuard(), seed)
    Z = fitted.transform(X)
    (name, spec), = [(n, s) for n, s in cfg.classifier_entries()][:1]
    scores = []
    for train, test in folds:
        model = fit(spec, Z[train], y[train], seed)
        scores.append(weighted_f1(y[test], predict(model, Z[test])))
    return guarded, float(np.mean(scores))


class Stopwatch:
    """Accumulates wall time per named stage."""

    def __init__(self):
        self.durations = {}

    def __call__(self, name):
        sw = self

        class _Ctx:
            def __enter__(self):
                self.t = time.perf_counter()

            def __exit__(self, *exc):
                sw.durations[name] = sw.durations.get(name, 0.0) + time.perf_counter() - self.t

        return _Ctx()


def _check_labels(dataset):
    if np.unique(dataset.y).size < 2:
        raise DataValidationError("the dataset contains a single stage class")


# ---------------------------------------------------------------------------
# end-to-end runner


def run(cfg: PipelineConfig, out_dir, command: str = "pipeline", dataset=None) -> dict:
    """Run the configured analyses and write reports plus a manifest.

    ``command`` selects what runs: ``"trials"`` (repeated train/test runs),
    ``"cv"`` (k-fold cross-validation) or ``"pipeline"`` (DE analysis if
    enabled, then trials and/or cv as set in ``evaluation``).
    """
    from .de import deg_analysis
    from .reports import RunManifest, emit_reports

    out = Path(out_dir)
    manifest = RunManifest(out, cfg.sha256, cfg.seed, command)
    manifest.write()
    (out / "config.resolved.json").write_text(cfg.canonical_json(), encoding="utf-8")
    manifest.files.append("config.resolved.json")
    sw = Stopwatch()
    manifest.durations = sw.durations
    ev = cfg.resolved["evaluation"]
    results = {}
    try:
        with sw("load"):
            ds = dataset if dataset is not None else _load(cfg)
            _check_labels(ds)
        deg = cfg.resolved["deg"]
        if command == "pipeline" and deg["enabled"]:
            with sw("deg"):
                results["deg"] = deg_analysis(ds, deg["alpha"], deg["lfc_threshold"],
                                              deg["variant"], deg["pseudocount"])
        if command == "trials" or (command == "pipeline" and ev["run_trials"]):
            with sw("trials"):
                results["trials"] = repeated_trials(cfg, ds)
            notes = {n for run_ in results["trials"].runs for o in run_ for n in o.notes}
            manifest.notes.extend(sorted(notes))
        if command == "cv" or (command == "pipeline" and ev["run_cv"]):
            with sw("cv"):
                results["cv"] = cross_validate(cfg, ds)
        with sw("reports"):
            manifest.files.extend(emit_reports(results, out))
    except BaseException as exc:
        manifest.notes.append(f"failed: {type(exc).__name__}: {exc}")
        manifest.finalize("failed")
        raise
    manifest.finalize()
    return results
