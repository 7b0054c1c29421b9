import json

import numpy as np
import pytest

from stageml import pipeline as pl
from stageml.data import write_expression_matrix, write_labels
from stageml.errors import ConfigError, DataValidationError, LeakageError
from stageml.evaluation import GridSpec
from stageml.reports import emit_reports
from stageml.synthetic import planted_signal


def _cfg(**extra):
    doc = {"input": {"matrix": "m.tsv", "labels": "l.tsv"},
           "classifiers": [{"kind": "NB"}]}
    doc.update(extra)
    return pl.PipelineConfig.from_dict(doc)


def test_defaults_resolved_and_hash_stable():
    cfg = _cfg()
    assert cfg["evaluation"]["n_runs"] == 100 and cfg["standardize"] is True
    assert cfg["augmentation"]["factor"] == 10 and cfg.seed == 0
    assert cfg.sha256 == _cfg().sha256
    assert cfg.sha256 != _cfg(seed=1).sha256
    assert json.loads(cfg.canonical_json()) == cfg.resolved


def test_schema_violations_name_the_location():
    with pytest.raises(ConfigError, match="selection"):
        _cfg(selection={"method": "lasso"})
    with pytest.raises(ConfigError):
        _cfg(unknown_key=1)
    with pytest.raises(ConfigError, match="evaluation"):
        _cfg(evaluation={"test_fraction": 1.0})
    with pytest.raises(ConfigError):
        pl.PipelineConfig.from_dict({"classifiers": [{"kind": "NB"}]})
    with pytest.raises(ConfigError):
        pl.PipelineConfig.from_dict([1, 2])


def test_overrides_and_classifier_entries():
    doc = {"input": {"matrix": "m", "labels": "l"},
           "classifiers": [{"kind": "RF", "grid": "builtin"},
                           {"kind": "KNN", "name": "knn3", "params": {"n_neighbors": 3}}]}
    cfg = pl.PipelineConfig.from_dict(doc, overrides={"evaluation.n_runs": 3, "seed": 9})
    assert cfg["evaluation"]["n_runs"] == 3 and cfg.seed == 9
    (n1, e1), (n2, e2) = cfg.classifier_entries()
    assert n1 == "RF" and isinstance(e1, GridSpec) and e1.size == 36
    assert n2 == "knn3" and e2.params["n_neighbors"] == 3
    with pytest.raises(ConfigError):
        pl.PipelineConfig.from_dict(doc, overrides={"evaluation.n_runs": 0})
    dup = {"input": {"matrix": "m", "labels": "l"}, "classifiers": [{"kind": "NB"}] * 2}
    with pytest.raises(ConfigError, match="duplicate"):
        pl.PipelineConfig.from_dict(dup)
    with pytest.raises(ConfigError, match="builtin"):
        pl.PipelineConfig.from_dict({"input": {"matrix": "m", "labels": "l"},
                                     "classifiers": [{"kind": "MLP", "grid": "builtin"}]})
    with pytest.raises(ConfigError):
        pl.PipelineConfig.from_dict({"input": {"matrix": "m", "labels": "l"},
                                     "classifiers": [{"kind": "KNN",
                                                      "params": {"n_neighbors": 0}}]})


def test_from_file_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        pl.PipelineConfig.from_file(tmp_path / "nope.json")
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ConfigError, match="invalid JSON"):
        pl.PipelineConfig.from_file(tmp_path / "bad.json")


def test_derive_seed_streams():
    assert pl.derive_seed(0, 1) == pl.derive_seed(0, 1)
    seeds = {pl.derive_seed(0, k) for k in range(50)} | {pl.derive_seed(1, k) for k in range(50)}
    assert len(seeds) == 100
    assert pl.derive_seed(3, 1, 2) != pl.derive_seed(3, 2, 1)


def test_leakage_guard():
    g = pl.LeakageGuard([3, 4])
    g.check([0, 1, 2], "standardize")
    with pytest.raises(LeakageError, match="select_fpr"):
        g.check(np.arange(5), "select_fpr")
    pl.LeakageGuard().check(np.arange(5), "pca")


def test_preprocessor_refuses_held_out_rows():
    ds = planted_signal(40, 30, 4, seed=1)
    cfg = _cfg(selection={"method": "select_fpr"})
    with pytest.raises(LeakageError):
        pl.fit_preprocessor(cfg, ds.X, ds.y, np.arange(40), pl.LeakageGuard([7]), 0)


def test_component_clamp_note_and_augmentation_sizes():
    ds = planted_signal(30, 12, 4, seed=2)
    rows = np.arange(30)
    for method in ("pca", "ica"):
        cfg = _cfg(transform={"method": method, "n_components": 50})
        fitted, Xt, yt = pl.fit_preprocessor(cfg, ds.X, ds.y, rows, pl.LeakageGuard(), 0)
        assert f"{method} n_components clamped from 50 to 12" in fitted.notes
        assert Xt.shape == (30, 12)
        assert fitted.transform(ds.X[:3]).shape == (3, 12)
    # gaussian keeps each row's copies together, sfa appends whole passes
    layouts = {"gaussian": np.r_[ds.y, np.repeat(ds.y, 2)], "sfa": np.tile(ds.y, 3)}
    for method, labels in layouts.items():
        cfg = _cfg(augmentation={"method": method, "factor": 3})
        _, Xt, yt = pl.fit_preprocessor(cfg, ds.X, ds.y, rows, pl.LeakageGuard(), 0)
        assert Xt.shape == (90, 12) and np.array_equal(yt, labels)
    cfg = _cfg(augmentation={"method": "smote"})
    _, Xt, yt = pl.fit_preprocessor(cfg, ds.X, ds.y, rows, pl.LeakageGuard(), 0)
    assert np.bincount(yt).tolist() == [18, 18]


def test_leaky_selection_inflates_score():
    # pure noise: any apparent skill comes from selecting on held-out rows
    ds = planted_signal(60, 2000, 0, seed=3)
    cfg = _cfg(selection={"method": "select_fpr", "alpha": 0.05},
               classifiers=[{"kind": "KNN", "params": {"n_neighbors": 5}}])
    err, leaky = pl.leaky_cv_score(cfg, ds, k=5, seed=0)
    assert isinstance(err, LeakageError)
    honest = pl.cross_validate(cfg, ds, k=5, seed=0).mean["KNN"]
    assert leaky > honest + 15


def test_repeated_trials_are_repeatable():
    ds = planted_signal(60, 40, 10, shift=1.5, seed=4)
    cfg = _cfg(classifiers=[{"kind": "NB"}, {"kind": "KNN", "grid": {"n_neighbors": [1, 5]}}],
               evaluation={"n_runs": 3, "cv_folds": 3})
    a = pl.repeated_trials(cfg, ds)
    b = pl.repeated_trials(cfg, ds)
    assert set(a.summaries) == {"NB", "KNN"}
    for name in a.summaries:
        assert a.summaries[name].mean == b.summaries[name].mean
        assert a.summaries[name].n_runs == 3
    assert a.summaries["NB"].mean["f1"] > 70
    # runs differ from each other (independent splits)
    assert len({tuple(r[0].confusion.counts.ravel()) for r in a.runs}) > 1


def test_cross_validate_shapes():
    ds = planted_signal(50, 30, 6, shift=1.5, seed=5)
    res = pl.cross_validate(_cfg(), ds, k=4, seed=1)
    assert len(res.fold_f1["NB"]) == 4 and len(res.folds) == 4
    assert res.best["NB"] >= res.mean["NB"]


def test_run_writes_reports(tmp_path):
    ds = planted_signal(40, 20, 6, shift=1.5, seed=6)
    write_expression_matrix(ds.matrix, tmp_path / "m.tsv")
    write_labels(ds.matrix.sample_ids, ds.y, tmp_path / "l.tsv")
    doc = {"input": {"matrix": "m.tsv", "labels": "l.tsv"}, "classifiers": [{"kind": "NB"}],
           "deg": {"enabled": True}, "evaluation": {"n_runs": 2, "run_cv": True, "cv_k": 3}}
    (tmp_path / "c.json").write_text(json.dumps(doc))
    cfg = pl.PipelineConfig.from_file(tmp_path / "c.json")
    out = tmp_path / "out"
    out.mkdir()
    results = pl.run(cfg, out)
    assert set(results) == {"deg", "trials", "cv"}
    names = {p.name for p in out.iterdir()}
    assert {"manifest.json", "config.resolved.json", "summary.json", "cv_summary.json",
            "volcano.csv", "deg_summary.json", "trials_long.csv"} <= names
    man = json.loads((out / "manifest.json").read_text())
    assert man["status"] == "complete" and man["config_sha256"] == cfg.sha256


def test_run_single_class_marks_manifest_failed(tmp_path):
    ds = planted_signal(20, 5, 0, late_fraction=1.0, seed=7)
    out = tmp_path / "o"
    out.mkdir()
    with pytest.raises(DataValidationError):
        pl.run(_cfg(), out, dataset=ds)
    assert json.loads((out / "manifest.json").read_text())["status"] == "failed"


def test_emit_reports_rejects_empty(tmp_path):
    with pytest.raises(DataValidationError):
        emit_reports({}, tmp_path)
