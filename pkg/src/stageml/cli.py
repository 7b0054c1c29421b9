"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 invalid data or configuration,
3 numerical failure. Machine-readable outputs go to the output directory
(``--output-dir``, else ``$STAGEML_OUTPUT_DIR``, else ``./stageml_out``);
stdout gets a short human summary.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import augment as aug
from . import classifiers as clf
from . import transform as tf
from .data import (LabeledDataset, StageLabel, align_labels, read_expression_matrix,
                   read_labels, write_expression_matrix, write_labels)
from .de import deg_analysis, write_deg_summary, write_volcano_csv
from .errors import (ConfigError, DataValidationError, LeakageError, NumericalError,
                     StagemlError)
from .evaluation import GridSpec, DEFAULT_GRIDS, confusion, grid_search, metrics, write_cv_table
from .pipeline import PipelineConfig, run
from .reports import RunManifest
from .selection import anova_f_classif, project, select_fpr, write_scores_csv

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3
OUTPUT_ENV = "STAGEML_OUTPUT_DIR"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _json_arg(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"not valid JSON: {exc}") from None


def _set_arg(text):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError("expected KEY=VALUE")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def _common(p, matrix=True, labels=False):
    if matrix:
        p.add_argument("--matrix", required=True, help="expression matrix file")
    if labels:
        p.add_argument("--labels", required=True, help="sample-to-stage label file")
    p.add_argument("--delimiter", default="\t")
    p.add_argument("--orientation", default="samples_as_rows",
                   choices=["samples_as_rows", "genes_as_rows"])
    p.add_argument("--log-transform", action="store_true", help="apply log2(x + 1) on load")
    p.add_argument("-o", "--output-dir", default=None)


def build_parser():
    ap = _Parser(prog="stageml", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("validate", help="check a matrix (and labels) and print its shape")
    _common(p)
    p.add_argument("--labels", default=None)

    p = sub.add_parser("deg", help="differential expression, volcano data")
    _common(p, labels=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--lfc", type=float, default=1.0, help="|log2 fold change| threshold")
    p.add_argument("--variant", choices=["pooled", "welch"], default="pooled")
    p.add_argument("--pseudocount", type=float, default=1e-9)

    p = sub.add_parser("select", help="ANOVA F scores and SelectFpr")
    _common(p, labels=True)
    p.add_argument("--alpha", type=float, default=0.05)

    p = sub.add_parser("transform", help="standardize, PCA or ICA")
    _common(p)
    p.add_argument("--method", choices=["standardize", "pca", "ica"], default=None)
    p.add_argument("--n-components", type=int, default=100)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", default=None, help="apply a saved model instead of fitting")

    p = sub.add_parser("augment", help="SMOTE, SFA or Gaussian expansion")
    _common(p, labels=True)
    p.add_argument("--method", choices=["smote", "sfa", "gaussian"], required=True)
    p.add_argument("--k-neighbors", type=int, default=5)
    p.add_argument("--target", default="balance", help="'balance' or a minority/majority ratio")
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=0.01)
    p.add_argument("--sigma1", type=float, default=0.01)
    p.add_argument("--sigma2", type=float, default=None)
    p.add_argument("--absolute", action="store_true", help="sigma is absolute, not relative")
    p.add_argument("--factor", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("train", help="fit one classifier")
    _common(p, labels=True)
    p.add_argument("--kind", required=True, choices=list(clf.KINDS))
    p.add_argument("--params", type=_json_arg, default={}, help="hyperparameters as JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strict-convergence", action="store_true",
                   help="exit 3 if the solver did not converge")

    p = sub.add_parser("predict", help="predict stages with a saved model")
    _common(p)
    p.add_argument("--model", required=True)

    p = sub.add_parser("grid", help="grid search with stratified k-fold CV")
    _common(p, labels=True)
    p.add_argument("--kind", required=True, choices=sorted(DEFAULT_GRIDS))
    p.add_argument("--grid", type=_json_arg, default=None,
                   help="JSON object of value lists (default: the built-in table)")
    p.add_argument("--params", type=_json_arg, default={}, help="fixed hyperparameters")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("evaluate", help="confusion matrix and weighted metrics")
    _common(p, labels=True)
    p.add_argument("--model", required=True)

    for name, help_ in (("cv", "k-fold cross-validation of a configured pipeline"),
                        ("trials", "repeated train/test trials of a configured pipeline"),
                        ("pipeline", "run everything a config enables")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True)
        p.add_argument("-o", "--output-dir", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--n-runs", type=int, default=None)
        p.add_argument("--k", type=int, default=None, help="number of CV folds")
        p.add_argument("--set", type=_set_arg, action="append", default=[],
                       metavar="KEY=VALUE", help="override a config key (dotted path)")
    return ap


def _out_dir(args, cfg=None):
    if args.output_dir:
        return Path(args.output_dir)
    if cfg is not None and cfg.resolved.get("output_dir"):
        return cfg.base_dir / cfg.resolved["output_dir"]
    return Path(os.environ.get(OUTPUT_ENV) or "stageml_out")


def _load_matrix(args):
    return read_expression_matrix(args.matrix, args.delimiter, args.orientation,
                                  args.log_transform)


def _load_dataset(args):
    return align_labels(_load_matrix(args), read_labels(args.labels, args.delimiter))


class _Outputs:
    """Output directory with a manifest covering the resolved arguments."""

    def __init__(self, args):
        self.dir = _out_dir(args)
        resolved = {k: v for k, v in sorted(vars(args).items()) if k != "output_dir"}
        text = json.dumps(resolved, sort_keys=True, indent=2, default=str) + "\n"
        self.manifest = RunManifest(self.dir, hashlib.sha256(text.encode()).hexdigest(),
                                    int(getattr(args, "seed", 0) or 0), args.command)
        self.manifest.write()
        (self.dir / "config.resolved.json").write_text(text, encoding="utf-8")
        self.manifest.files.append("config.resolved.json")

    def path(self, name):
        self.manifest.files.append(name)
        return self.dir / name


def cmd_validate(args):
    m = _load_matrix(args)
    print(f"shape: ({m.n_samples}, {m.n_genes})")
    if args.labels:
        ds = align_labels(m, read_labels(args.labels, args.delimiter))
        counts = ds.class_counts()
        print("classes: " + ", ".join(f"{k}={v}" for k, v in counts.items()))
    return None


def cmd_deg(args, out):
    table = deg_analysis(_load_dataset(args), args.alpha, args.lfc, args.variant,
                         args.pseudocount)
    write_volcano_csv(table, out.path("volcano.csv"))
    write_deg_summary(table, out.path("deg_summary.json"))
    c = table.counts()
    print(f"up-regulated: {c['up']}  down-regulated: {c['down']}  not significant: {c['ns']}")


def cmd_select(args, out):
    ds = _load_dataset(args)
    scores = anova_f_classif(ds)
    mask = select_fpr(scores, args.alpha)
    write_scores_csv(scores, ds.matrix.gene_ids, mask, out.path("scores.csv"))
    print(f"kept {len(mask)} of {ds.matrix.n_genes} features at alpha={args.alpha}")
    write_expression_matrix(project(ds.matrix, mask), out.path("selected.tsv"))


def cmd_transform(args, out):
    m = _load_matrix(args)
    if args.model:
        model = tf.load_model(args.model)
    elif args.method == "standardize":
        model = tf.fit_standardizer(m)
    elif args.method == "pca":
        model = tf.pca_fit(m, args.n_components)
    elif args.method == "ica":
        model = tf.ica_fit(m, args.n_components, args.max_iter, args.tol, args.seed)
    else:
        raise UsageError("transform needs --method or --model")
    result = model.transform(m)
    write_expression_matrix(result, out.path("transformed.tsv"))
    if not args.model:
        tf.save_model(model, out.path("transform_model.npz"))
    note = ""
    if isinstance(model, tf.ICAModel) and not model.converged:
        note = " (ICA did not converge)"
    print(f"{type(model).__name__}: {m.shape} -> {result.shape}{note}")


def cmd_augment(args, out):
    ds = _load_dataset(args)
    prov = ()
    if args.method == "smote":
        target = args.target if args.target == "balance" else float(args.target)
        res = aug.smote_with_provenance(ds, aug.SmoteParams(args.k_neighbors, target, args.seed))
        new, prov = res.dataset, res.provenance
    elif args.method == "gaussian":
        params = aug.NoiseParams(args.mu, args.sigma, not args.absolute, args.factor)
        new = aug.gaussian_expand(ds, params, args.seed)
        _, _, prov = aug.gaussian_expand_arrays(ds.X, ds.y, params, args.seed)
    else:
        params = aug.SFAParams(args.mu, args.sigma1, args.sigma2)
        values = aug.sfa(ds.X, params, args.seed)
        new = LabeledDataset(ds.matrix.with_values(values, "augmented"), ds.y)
    write_expression_matrix(new.matrix, out.path("augmented.tsv"))
    write_labels(new.matrix.sample_ids, new.y, out.path("augmented_labels.tsv"))
    if prov:
        aug.write_provenance_csv(prov, out.path("provenance.csv"))
    print(f"{args.method}: {ds.n_samples} -> {new.n_samples} rows; "
          + ", ".join(f"{k}={v}" for k, v in new.class_counts().items()))


def cmd_train(args, out):
    ds = _load_dataset(args)
    model = clf.fit(clf.ClassifierSpec(args.kind, args.params), ds.X, ds.y, args.seed)
    clf.dump_model(model, out.path("model.npz"))
    acc = float(np.mean(clf.predict(model, ds.X) == ds.y))
    print(f"{args.kind} trained on {ds.n_samples} samples; training accuracy "
          f"{100 * acc:.2f}%; converged={model.converged}")
    if args.strict_convergence and not model.converged:
        raise NumericalError(f"{args.kind} did not converge")


def cmd_predict(args, out):
    m = _load_matrix(args)
    model = clf.load_model(args.model)
    labels = clf.predict(model, m.values)
    with open(out.path("predictions.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "label"])
        for s, lab in zip(m.sample_ids, labels):
            w.writerow([s, str(StageLabel(int(lab)))])
    print(f"predicted {len(labels)} samples: Early={int(np.sum(labels == 0))} "
          f"Late={int(np.sum(labels == 1))}")


def cmd_grid(args, out):
    ds = _load_dataset(args)
    grid = GridSpec(args.kind, args.grid or DEFAULT_GRIDS[args.kind], args.folds, args.params)
    res = grid_search(grid, ds.X, ds.y, args.seed)
    write_cv_table(res, out.path("cv_table.csv"))
    best = {"best_index": res.best_index, "best_spec": res.best_spec.to_dict(),
            "mean_f1": res.mean_scores[res.best_index], "n_candidates": len(res.candidates)}
    with open(out.path("best.json"), "w", encoding="utf-8") as fh:
        json.dump(best, fh, indent=2, sort_keys=True)
        fh.write("\n")
    clf.dump_model(res.best_model, out.path("model.npz"))
    print(f"{len(res.candidates)} candidates; best #{res.best_index} "
          f"{json.dumps(best['best_spec']['params'], sort_keys=True)} "
          f"mean weighted F1 {best['mean_f1']:.2f}")


def cmd_evaluate(args, out):
    ds = _load_dataset(args)
    model = clf.load_model(args.model)
    cm = confusion(ds.y, clf.predict(model, ds.X))
    rep = metrics(cm)
    with open(out.path("confusion.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["actual", "predicted", "count"])
        for a, an in enumerate(("Early", "Late")):
            for p, pn in enumerate(("Early", "Late")):
                w.writerow([an, pn, int(cm.counts[a, p])])
    with open(out.path("metrics.json"), "w", encoding="utf-8") as fh:
        json.dump({"per_class": rep.per_class, "weighted": rep.weighted,
                   "support": rep.support, "degenerate": list(rep.degenerate)},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    wt = rep.weighted
    print(f"precision {wt['precision']:.2f}  recall {wt['recall']:.2f}  f1 {wt['f1']:.2f}")


def cmd_configured(args):
    overrides = dict(args.set)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.n_runs is not None:
        overrides["evaluation.n_runs"] = args.n_runs
    if args.k is not None:
        overrides["evaluation.cv_k"] = args.k
    cfg = PipelineConfig.from_file(args.config, overrides)
    out = _out_dir(args, cfg)
    results = run(cfg, out, args.command)
    if "deg" in results:
        c = results["deg"].counts()
        print(f"DEG: up {c['up']}, down {c['down']}, not significant {c['ns']}")
    if "trials" in results:
        for name, s in results["trials"].summaries.items():
            mean, best = s.mean, s.best
            print(f"{name}: mean P/R/F1 {mean['precision']:.2f}/{mean['recall']:.2f}/"
                  f"{mean['f1']:.2f}  best F1 {best['f1']:.2f}  ({s.n_runs} runs)")
    if "cv" in results:
        cv = results["cv"]
        for name in cv.fold_f1:
            print(f"{name}: {len(cv.fold_f1[name])}-fold mean F1 {cv.mean[name]:.2f}  "
                  f"best {cv.best[name]:.2f}")
    print(f"reports written to {out}")


_HANDLERS = {
    "deg": cmd_deg, "select": cmd_select, "transform": cmd_transform,
    "augment": cmd_augment, "train": cmd_train, "predict": cmd_predict, "grid": cmd_grid,
    "evaluate": cmd_evaluate,
}


def _dispatch(args):
    if args.command == "validate":
        return cmd_validate(args)
    if args.command in ("cv", "trials", "pipeline"):
        return cmd_configured(args)
    out = _Outputs(args)
    try:
        _HANDLERS[args.command](args, out)
    except BaseException as exc:
        out.manifest.notes.append(f"failed: {type(exc).__name__}: {exc}")
        out.manifest.finalize("failed")
        raise
    out.manifest.finalize()


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        _dispatch(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataValidationError, LeakageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except StagemlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
