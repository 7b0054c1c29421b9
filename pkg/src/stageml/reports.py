"""Report files and run manifests.

Everything except ``manifest.json`` is a deterministic function of the
inputs and seed, so repeated runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .de import write_deg_summary, write_volcano_csv
from .errors import DataValidationError
from .evaluation import METRICS

MANIFEST = "manifest.json"


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Written with status ``running`` when a run starts and rewritten with
    status ``complete`` (or ``failed``) at the end."""

    out_dir: Path
    config_sha256: str
    seed: int
    command: str
    started_at: str = field(default_factory=_now)
    finished_at: str = None
    status: str = "running"
    durations: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "tool": "stageml", "version": __version__, "command": self.command,
            "config_sha256": self.config_sha256, "seed": self.seed,
            "started_at": self.started_at, "finished_at": self.finished_at,
            "status": self.status,
            "durations_s": {k: round(v, 6) for k, v in self.durations.items()},
            "files": [{"name": f, "sha256": _sha256(self.out_dir / f)} for f in self.files],
            "notes": self.notes,
        }

    def write(self):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        _write_json(self.out_dir / MANIFEST, self.to_dict())

    def finalize(self, status="complete"):
        self.status = status
        self.finished_at = _now()
        self.files = sorted(set(self.files))
        self.write()


def summary_table(trials) -> dict:
    """``{algorithm: {"mean": {...}, "best": {...}}}`` with precision, recall
    and F1 in percent."""
    return {name: {"mean": s.mean, "best": s.best, "n_runs": s.n_runs}
            for name, s in trials.summaries.items()}


def write_boxplot_csv(trials, path):
    """Long format ``algorithm,run,metric,value``, one row per value."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["algorithm", "run", "metric", "value"])
        for name, s in trials.summaries.items():
            for r in range(s.n_runs):
                for m in METRICS:
                    w.writerow([name, r, m, repr(s.values[m][r])])


def write_summary_table_csv(trials, path):
    """The Mean / Best x precision / recall / F1 table, two decimals."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["statistic", "metric", *trials.summaries])
        for stat in ("mean", "best"):
            for m in METRICS:
                w.writerow([stat, m, *(f"{getattr(s, stat)[m]:.2f}"
                                       for s in trials.summaries.values())])


def write_confusion_csv(trials, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["algorithm", "run", "actual", "predicted", "count"])
        for r, run in enumerate(trials.runs):
            for o in run:
                for a, an in enumerate(("Early", "Late")):
                    for p, pn in enumerate(("Early", "Late")):
                        w.writerow([o.name, r, an, pn, int(o.confusion.counts[a, p])])


def write_trial_cv_table(trials, path):
    """Grid-search scores: one row per (run, algorithm, candidate, fold)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run", "algorithm", "candidate", "params", "fold", "f1", "flagged"])
        for r, run in enumerate(trials.runs):
            for o in run:
                if o.grid is None:
                    continue
                for row in o.grid.cv_table:
                    params = json.dumps(o.grid.candidates[row.candidate].to_dict()["params"],
                                        sort_keys=True)
                    w.writerow([r, o.name, row.candidate, params, row.fold, repr(row.f1),
                                int(row.flagged)])


def write_selected_csv(trials, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run", "algorithm", "spec"])
        for r, run in enumerate(trials.runs):
            for o in run:
                w.writerow([r, o.name, json.dumps(o.spec.to_dict(), sort_keys=True)])


def write_cv_csv(cv, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["algorithm", "fold", "f1"])
        for name, values in cv.fold_f1.items():
            for f, v in enumerate(values):
                w.writerow([name, f, repr(v)])


def emit_reports(results: dict, out_dir) -> list:
    """Write every report that ``results`` has data for.

    ``results`` may hold ``"trials"`` (:class:`~stageml.pipeline.TrialsResult`),
    ``"cv"`` (:class:`~stageml.pipeline.CVResult`) and ``"deg"``
    (:class:`~stageml.de.DEGTable`). Returns the file names written. Raises
    ``DataValidationError`` without writing anything when there is nothing
    to report.
    """
    results = {k: v for k, v in (results or {}).items() if v is not None}
    if not results:
        raise DataValidationError("no results to report")
    trials = results.get("trials")
    if trials is not None and not trials.summaries:
        raise DataValidationError("trial results are empty")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def emit(name, writer, obj):
        writer(obj, out / name)
        written.append(name)

    if trials is not None:
        emit("trials_long.csv", write_boxplot_csv, trials)
        emit("summary.json", lambda t, p: _write_json(p, summary_table(t)), trials)
        emit("summary_table.csv", write_summary_table_csv, trials)
        emit("confusion.csv", write_confusion_csv, trials)
        emit("selected_specs.csv", write_selected_csv, trials)
        if any(o.grid is not None for run in trials.runs for o in run):
            emit("cv_table.csv", write_trial_cv_table, trials)
    cv = results.get("cv")
    if cv is not None:
        emit("cv_folds.csv", write_cv_csv, cv)
        emit("cv_summary.json",
             lambda c, p: _write_json(p, {k: {"mean": c.mean[k], "best": c.best[k]}
                                          for k in c.fold_f1}), cv)
    deg = results.get("deg")
    if deg is not None:
        emit("volcano.csv", write_volcano_csv, deg)
        emit("deg_summary.json", write_deg_summary, deg)
    return written
