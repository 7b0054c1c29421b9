"""Expression matrices, stage labels and train/test splitting."""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, TextIO

import numpy as np

from .errors import (
    DataValidationError,
    DuplicateIdError,
    EmptyInputError,
    NegativeValueError,
    NonNumericCellError,
    RaggedRowError,
    StratificationError,
    UnknownStageError,
)

__all__ = [
    "StageLabel",
    "ExpressionMatrix",
    "LabeledDataset",
    "SplitPair",
    "map_stage_label",
    "parse_expression_matrix",
    "read_expression_matrix",
    "serialize_expression_matrix",
    "write_expression_matrix",
    "parse_labels",
    "read_labels",
    "write_labels",
    "align_labels",
    "split",
    "split_indices",
    "round_half_up",
]

NONNEGATIVE_UNITS = frozenset({"tpm", "log2tpm"})


class StageLabel(enum.IntEnum):
    """Binary pathological stage. Ordered Early < Late."""

    EARLY = 0
    LATE = 1

    def __str__(self):
        return self.name.capitalize()

    @classmethod
    def parse(cls, text: str) -> "StageLabel":
        """Accept either a T-stage code or the words early/late."""
        key = text.strip().lower()
        if key == "early":
            return cls.EARLY
        if key == "late":
            return cls.LATE
        return map_stage_label(text)


EARLY_CODES = ("t1a", "t1b", "t1c", "t2", "t2a", "t2b", "t2c")
LATE_CODES = ("t3a", "t3b", "t4")
_STAGE_TABLE = {**{c: StageLabel.EARLY for c in EARLY_CODES},
                **{c: StageLabel.LATE for c in LATE_CODES}}


def map_stage_label(t_stage_code: str) -> StageLabel:
    """Map an AJCC pathological T code to Early (t1a..t2c) or Late (t3a..t4).

    Matching ignores case and surrounding whitespace.
    """
    key = str(t_stage_code).strip().lower()
    try:
        return _STAGE_TABLE[key]
    except KeyError:
        raise UnknownStageError(t_stage_code) from None


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def _check_unique(ids, what):
    seen = {}
    for i, name in enumerate(ids):
        if name in seen:
            raise DuplicateIdError(f"duplicate {what} id {name!r} at positions "
                                   f"{seen[name]} and {i}")
        seen[name] = i


@dataclass(frozen=True, eq=False)
class ExpressionMatrix:
    """Samples x genes table of expression values.

    ``units`` records what the values are. Raw and log-scaled TPM
    (``"tpm"``, ``"log2tpm"``) must be non-negative; derived spaces such as
    ``"standardized"`` or ``"pca"`` may hold any finite value.
    """

    sample_ids: tuple
    gene_ids: tuple
    values: np.ndarray
    units: str = "tpm"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DataValidationError(f"values must be 2-D, got shape {values.shape}")
        object.__setattr__(self, "sample_ids", tuple(str(s) for s in self.sample_ids))
        object.__setattr__(self, "gene_ids", tuple(str(g) for g in self.gene_ids))
        if values.shape != (len(self.sample_ids), len(self.gene_ids)):
            raise DataValidationError(
                f"values shape {values.shape} does not match "
                f"{len(self.sample_ids)} samples x {len(self.gene_ids)} genes")
        _check_unique(self.sample_ids, "sample")
        _check_unique(self.gene_ids, "gene")
        if not np.all(np.isfinite(values)):
            r, c = np.argwhere(~np.isfinite(values))[0]
            raise DataValidationError(f"non-finite value at sample {r}, gene {c}")
        if self.units in NONNEGATIVE_UNITS and values.size and values.min() < 0:
            r, c = np.argwhere(values < 0)[0]
            raise NegativeValueError("negative expression value", row=int(r), column=int(c))
        object.__setattr__(self, "values", _readonly(values))

    @property
    def shape(self):
        return self.values.shape

    @property
    def n_samples(self):
        return self.values.shape[0]

    @property
    def n_genes(self):
        return self.values.shape[1]

    def take_samples(self, index) -> "ExpressionMatrix":
        index = np.asarray(index, dtype=np.int64)
        return ExpressionMatrix(tuple(self.sample_ids[i] for i in index), self.gene_ids,
                                self.values[index], self.units)

    def take_genes(self, index) -> "ExpressionMatrix":
        index = np.asarray(index, dtype=np.int64)
        return ExpressionMatrix(self.sample_ids, tuple(self.gene_ids[i] for i in index),
                                self.values[:, index], self.units)

    def with_values(self, values, units, gene_ids=None) -> "ExpressionMatrix":
        """Same samples, new feature values (e.g. after a transform)."""
        values = np.asarray(values, dtype=np.float64)
        if gene_ids is None:
            if values.shape[1] == self.n_genes:
                gene_ids = self.gene_ids
            else:
                gene_ids = tuple(f"{units}{i}" for i in range(values.shape[1]))
        return ExpressionMatrix(self.sample_ids, gene_ids, values, units)


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """An expression matrix with one stage label per row."""

    matrix: ExpressionMatrix
    labels: np.ndarray = field()

    def __post_init__(self):
        labels = np.asarray([int(StageLabel(int(v))) for v in np.ravel(self.labels)],
                            dtype=np.int64)
        if labels.shape[0] != self.matrix.n_samples:
            raise DataValidationError(
                f"{labels.shape[0]} labels for {self.matrix.n_samples} samples")
        object.__setattr__(self, "labels", _readonly(labels))

    @property
    def X(self) -> np.ndarray:
        return self.matrix.values

    @property
    def y(self) -> np.ndarray:
        """Labels as integers (0 = Early, 1 = Late)."""
        return self.labels

    @property
    def n_samples(self):
        return self.matrix.n_samples

    def class_counts(self) -> dict:
        return {str(lab): int(np.sum(self.labels == lab)) for lab in StageLabel}

    def take(self, index) -> "LabeledDataset":
        index = np.asarray(index, dtype=np.int64)
        return LabeledDataset(self.matrix.take_samples(index), self.labels[index])


@dataclass(frozen=True, eq=False)
class SplitPair:
    train: LabeledDataset
    test: LabeledDataset
    seed: int
    train_index: np.ndarray
    test_index: np.ndarray


# ---------------------------------------------------------------------------
# parsing


def _iter_rows(source: TextIO, delimiter: str):
    for lineno, line in enumerate(source, start=1):
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        yield lineno, line.split(delimiter)


def _parse_cell(text, row, column):
    try:
        v = float(text)
    except ValueError:
        raise NonNumericCellError(f"non-numeric cell {text!r}", row=row, column=column) from None
    if not math.isfinite(v):
        raise NonNumericCellError(f"non-finite cell {text!r}", row=row, column=column)
    if v < 0:
        raise NegativeValueError(f"negative value {text!r}", row=row, column=column)
    return v


def parse_expression_matrix(source: TextIO | str, delimiter: str = "\t",
                            orientation: str = "samples_as_rows",
                            log_transform: bool = False) -> ExpressionMatrix:
    """Parse a delimited expression table.

    The first row holds a corner cell followed by column ids; every other
    row starts with its row id. With ``orientation="samples_as_rows"``
    (default) the columns are genes; ``"genes_as_rows"`` reads the
    transposed layout. ``log_transform`` applies ``log2(x + 1)``.

    Errors carry 1-based file coordinates (``row``, ``column``).
    """
    if orientation not in ("samples_as_rows", "genes_as_rows"):
        raise DataValidationError(f"unknown orientation {orientation!r}")
    if isinstance(source, str):
        source = io.StringIO(source)

    rows = _iter_rows(source, delimiter)
    try:
        header_line, header = next(rows)
    except StopIteration:
        raise EmptyInputError("empty input") from None
    col_ids = [c.strip() for c in header[1:]]
    if not col_ids:
        raise EmptyInputError("header has no data columns", row=header_line)
    for j, c in enumerate(col_ids):
        if not c:
            raise DataValidationError(f"empty column id at column {j + 2}")
    try:
        _check_unique(col_ids, "column")
    except DuplicateIdError as exc:
        raise DuplicateIdError(str(exc), row=header_line) from None

    width = len(header)
    row_ids, data, seen = [], [], {}
    for lineno, cells in rows:
        if len(cells) != width:
            raise RaggedRowError(f"expected {width} cells, found {len(cells)}", row=lineno)
        rid = cells[0].strip()
        if rid in seen:
            raise DuplicateIdError(f"duplicate row id {rid!r} (first seen on row {seen[rid]})",
                                   row=lineno, column=1)
        seen[rid] = lineno
        row_ids.append(rid)
        data.append([_parse_cell(c, lineno, j) for j, c in enumerate(cells[1:], start=2)])
    if not data:
        raise EmptyInputError("no data rows", row=header_line)

    values = np.array(data, dtype=np.float64)
    units = "tpm"
    if orientation == "genes_as_rows":
        row_ids, col_ids = col_ids, row_ids
        values = values.T
    if log_transform:
        values = np.log2(values + 1.0)
        units = "log2tpm"
    return ExpressionMatrix(tuple(row_ids), tuple(col_ids), values, units)


def read_expression_matrix(path, delimiter="\t", orientation="samples_as_rows",
                           log_transform=False) -> ExpressionMatrix:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_expression_matrix(fh, delimiter, orientation, log_transform)


def serialize_expression_matrix(matrix: ExpressionMatrix, stream: TextIO,
                                delimiter: str = "\t", corner: str = "sample_id"):
    """Write ``matrix`` row-major with a header row; values use ``repr`` so
    they parse back bit-for-bit."""
    stream.write(delimiter.join([corner, *matrix.gene_ids]) + "\n")
    for sid, row in zip(matrix.sample_ids, matrix.values):
        stream.write(delimiter.join([sid, *(repr(float(v)) for v in row)]) + "\n")


def write_expression_matrix(matrix: ExpressionMatrix, path, delimiter="\t"):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        serialize_expression_matrix(matrix, fh, delimiter)


def parse_labels(source: TextIO | str, delimiter: str = "\t") -> dict:
    """Read a two-column (sample_id, stage) file into ``{sample_id: StageLabel}``.

    The stage column takes T codes or the words early/late. A first line
    whose stage cell is not recognised is treated as a header.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    out = {}
    first = True
    for lineno, cells in _iter_rows(source, delimiter):
        if len(cells) != 2:
            raise RaggedRowError(f"expected 2 cells, found {len(cells)}", row=lineno)
        sid, code = cells[0].strip(), cells[1]
        try:
            label = StageLabel.parse(code)
        except UnknownStageError:
            if first:
                first = False
                continue
            raise
        first = False
        if sid in out:
            raise DuplicateIdError(f"duplicate sample id {sid!r}", row=lineno, column=1)
        out[sid] = label
    if not out:
        raise EmptyInputError("label file has no entries")
    return out


def read_labels(path, delimiter="\t") -> dict:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_labels(fh, delimiter)


def write_labels(sample_ids: Iterable[str], labels: Iterable[int], path, delimiter="\t"):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"sample_id{delimiter}stage\n")
        for sid, lab in zip(sample_ids, labels):
            fh.write(f"{sid}{delimiter}{StageLabel(int(lab))}\n")


def align_labels(matrix: ExpressionMatrix, labels: Mapping[str, StageLabel],
                 drop_unlabeled: bool = False) -> LabeledDataset:
    """Attach labels to matrix rows by sample id.

    Samples without a label raise unless ``drop_unlabeled`` is set.
    """
    keep, y = [], []
    for i, sid in enumerate(matrix.sample_ids):
        if sid in labels:
            keep.append(i)
            y.append(int(labels[sid]))
        elif not drop_unlabeled:
            raise DataValidationError(f"no stage label for sample {sid!r}")
    if not keep:
        raise DataValidationError("no labelled samples")
    if len(keep) != matrix.n_samples:
        matrix = matrix.take_samples(keep)
    return LabeledDataset(matrix, np.array(y))


def load_dataset(matrix_path, labels_path, delimiter="\t", orientation="samples_as_rows",
                 log_transform=False, drop_unlabeled=False) -> LabeledDataset:
    matrix = read_expression_matrix(matrix_path, delimiter, orientation, log_transform)
    return align_labels(matrix, read_labels(labels_path, delimiter), drop_unlabeled)


# ---------------------------------------------------------------------------
# splitting


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _apportion(total: int, sizes: np.ndarray, fraction: float) -> np.ndarray:
    """Largest-remainder allocation of ``total`` across groups in proportion
    to ``sizes``; ties go to the lower group index."""
    exact = sizes * fraction
    base = np.floor(exact).astype(np.int64)
    rest = total - int(base.sum())
    if rest > 0:
        order = sorted(range(len(sizes)), key=lambda c: (-(exact[c] - base[c]), c))
        for c in order[:rest]:
            base[c] += 1
    elif rest < 0:
        order = sorted(range(len(sizes)), key=lambda c: (exact[c] - base[c], c))
        for c in order[:-rest]:
            base[c] -= 1
    return base


def split_indices(y, test_fraction: float = 0.2, stratified: bool = True, seed: int = 0):
    """Index-level train/test partition; returns sorted (train, test).

    The test side has ``round(test_fraction * n)`` rows. Stratified splits
    apportion that count across classes by largest remainder, so each
    class is within one sample of its exact share.
    """
    y = np.asarray(y)
    n = y.shape[0]
    if not 0.0 < test_fraction < 1.0:
        raise DataValidationError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    if n < 2:
        raise DataValidationError("need at least 2 samples to split")
    n_test = round_half_up(test_fraction * n)
    if n_test < 1 or n_test > n - 1:
        raise DataValidationError(f"test_fraction {test_fraction} leaves an empty side for n={n}")
    rng = np.random.default_rng(seed)
    if not stratified:
        perm = rng.permutation(n)
        return np.sort(perm[n_test:]), np.sort(perm[:n_test])

    classes = np.unique(y)
    members = [np.flatnonzero(y == c) for c in classes]
    sizes = np.array([len(m) for m in members])
    per_class = _apportion(n_test, sizes, test_fraction)
    test = []
    for c, idx, k in zip(classes, members, per_class):
        if k < 1 or k > len(idx) - 1:
            raise StratificationError(
                f"class {c} with {len(idx)} samples cannot appear on both sides "
                f"of a {test_fraction:g} split")
        test.append(rng.permutation(idx)[:k])
    test = np.sort(np.concatenate(test))
    train = np.setdiff1d(np.arange(n), test)
    return train, test


def split(dataset: LabeledDataset, test_fraction: float = 0.2, stratified: bool = True,
          seed: int = 0) -> SplitPair:
    train, test = split_indices(dataset.y, test_fraction, stratified, seed)
    return SplitPair(dataset.take(train), dataset.take(test), seed, train, test)
