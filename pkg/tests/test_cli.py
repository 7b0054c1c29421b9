import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from stageml import cli
from stageml.data import ExpressionMatrix, write_expression_matrix, write_labels
from stageml.synthetic import planted_signal


@pytest.fixture
def files(tmp_path):
    ds = planted_signal(48, 16, 6, shift=1.5, seed=11)
    write_expression_matrix(ds.matrix, tmp_path / "m.tsv")
    write_labels(ds.matrix.sample_ids, ds.y, tmp_path / "l.tsv")
    return tmp_path, ["--matrix", str(tmp_path / "m.tsv")], ["--labels", str(tmp_path / "l.tsv")]


def _manifest(d):
    return json.loads((d / "manifest.json").read_text())


def test_usage_errors_exit_1(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert cli.main([]) == 1
    assert cli.main(["bogus"]) == 1
    assert cli.main(["train", "--matrix", "x"]) == 1
    assert cli.main(["train", "--matrix", "x", "--labels", "y", "--kind", "RF",
                     "--params", "{oops"]) == 1
    assert cli.main(["transform", "--matrix", "x"]) != 0


def test_missing_file_exits_2(tmp_path, capsys):
    assert cli.main(["validate", "--matrix", str(tmp_path / "none.tsv")]) == 2
    assert cli.main(["pipeline", "--config", str(tmp_path / "none.json")]) == 2
    assert "error" in capsys.readouterr().err


def test_bad_matrix_exits_2_with_coordinates(tmp_path, capsys):
    (tmp_path / "m.tsv").write_text("sample\tg1\ns1\t1.0\ns2\tabc\n")
    assert cli.main(["validate", "--matrix", str(tmp_path / "m.tsv")]) == 2
    err = capsys.readouterr().err
    assert "abc" in err or "row" in err


def test_validate(files, capsys):
    d, m, lab = files
    assert cli.main(["validate", *m, *lab]) == 0
    out = capsys.readouterr().out
    assert "shape: (48, 16)" in out and "Early=" in out


def test_deg_select_transform_augment(files, capsys):
    d, m, lab = files
    o = ["-o", str(d / "o")]
    assert cli.main(["deg", *m, *lab, *o]) == 0
    assert (d / "o" / "volcano.csv").exists()
    assert cli.main(["select", *m, *lab, *o, "--alpha", "0.05"]) == 0
    rows = list(csv.reader(open(d / "o" / "selected.tsv"), delimiter="\t"))
    assert len(rows) == 49
    assert cli.main(["transform", *m, *o, "--method", "pca", "--n-components", "3"]) == 0
    assert cli.main(["transform", *m, "-o", str(d / "o2"),
                     "--model", str(d / "o" / "transform_model.npz")]) == 0
    assert (d / "o" / "transformed.tsv").read_bytes() == (d / "o2" / "transformed.tsv").read_bytes()
    assert cli.main(["augment", *m, *lab, *o, "--method", "smote"]) == 0
    assert "Early=" in capsys.readouterr().out
    assert (d / "o" / "provenance.csv").exists()
    assert _manifest(d / "o")["status"] == "complete"


def test_train_predict_evaluate_grid(files, capsys):
    d, m, lab = files
    o = ["-o", str(d / "o")]
    assert cli.main(["train", *m, *lab, *o, "--kind", "KNN",
                     "--params", '{"n_neighbors": 3}']) == 0
    model = str(d / "o" / "model.npz")
    assert cli.main(["predict", *m, "-o", str(d / "p"), "--model", model]) == 0
    preds = list(csv.reader(open(d / "p" / "predictions.csv")))
    assert preds[0] == ["sample_id", "label"] and len(preds) == 49
    assert {r[1] for r in preds[1:]} <= {"Early", "Late"}
    assert cli.main(["evaluate", *m, *lab, "-o", str(d / "e"), "--model", model]) == 0
    met = json.loads((d / "e" / "metrics.json").read_text())
    assert 0 <= met["weighted"]["f1"] <= 100
    assert cli.main(["grid", *m, *lab, "-o", str(d / "g"), "--kind", "KNN",
                     "--grid", '{"n_neighbors": [1, 3]}', "--folds", "3"]) == 0
    best = json.loads((d / "g" / "best.json").read_text())
    assert best["n_candidates"] == 2


def test_numerical_failures_exit_3(files, tmp_path, capsys):
    d, m, lab = files
    const = ExpressionMatrix(["a", "b", "c", "d"], ["g1", "g2"], np.ones((4, 2)))
    write_expression_matrix(const, tmp_path / "c.tsv")
    write_labels(["a", "b", "c", "d"], [0, 0, 1, 1], tmp_path / "cl.tsv")
    assert cli.main(["train", "--matrix", str(tmp_path / "c.tsv"), "--labels",
                     str(tmp_path / "cl.tsv"), "-o", str(tmp_path / "x"), "--kind", "NB"]) == 3
    assert _manifest(tmp_path / "x")["status"] == "failed"
    args = ["train", *m, *lab, "-o", str(d / "lr"), "--kind", "LR",
            "--params", '{"max_iter": 1, "tol": 1e-12}']
    assert cli.main(args) == 0
    assert cli.main(args + ["--strict-convergence"]) == 3


def test_config_commands(files, capsys):
    d, _, _ = files
    cfg = {"input": {"matrix": "m.tsv", "labels": "l.tsv"},
           "classifiers": [{"kind": "NB"}], "evaluation": {"n_runs": 2, "cv_k": 3}}
    (d / "c.json").write_text(json.dumps(cfg))
    assert cli.main(["trials", "--config", str(d / "c.json"), "-o", str(d / "t")]) == 0
    assert "NB: mean P/R/F1" in capsys.readouterr().out
    assert cli.main(["cv", "--config", str(d / "c.json"), "-o", str(d / "cv"), "--k", "4"]) == 0
    assert "4-fold" in capsys.readouterr().out
    assert cli.main(["trials", "--config", str(d / "c.json"), "-o", str(d / "t2"),
                     "--set", "evaluation.n_runs=0"]) == 2
    assert cli.main(["trials", "--config", str(d / "c.json"), "-o", str(d / "t3"),
                     "--set", "nonsense"]) == 1
    resolved = json.loads((d / "t" / "config.resolved.json").read_text())
    assert resolved["evaluation"]["n_runs"] == 2


def test_output_dir_from_environment(files, monkeypatch):
    d, m, lab = files
    monkeypatch.setenv(cli.OUTPUT_ENV, str(d / "env"))
    assert cli.main(["deg", *m, *lab]) == 0
    assert (d / "env" / "volcano.csv").exists()


def test_module_entry_point(files):
    d, m, _ = files
    r = subprocess.run([sys.executable, "-m", "stageml", "validate", *m],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "shape" in r.stdout
