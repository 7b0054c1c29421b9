import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stageml.data import (ExpressionMatrix, LabeledDataset, StageLabel, align_labels,
                          load_dataset, map_stage_label, parse_expression_matrix, parse_labels,
                          round_half_up, serialize_expression_matrix, split, split_indices,
                          write_expression_matrix, write_labels)
from stageml.errors import (DataValidationError, DuplicateIdError, EmptyInputError,
                            NegativeValueError, NonNumericCellError, RaggedRowError,
                            StratificationError, UnknownStageError)


def test_parse_small_table_exact():
    text = "id\tg1\tg2\tg3\ns1\t1.0\t2.0\t0.0\ns2\t4.5\t0.0\t7.0\n"
    m = parse_expression_matrix(text)
    assert m.shape == (2, 3)
    assert m.sample_ids == ("s1", "s2") and m.gene_ids == ("g1", "g2", "g3")
    assert np.array_equal(m.values, [[1.0, 2.0, 0.0], [4.5, 0.0, 7.0]])


def test_parse_transposed_orientation():
    text = "gene,s1,s2\ng1,1,4.5\ng2,2,0\n"
    m = parse_expression_matrix(text, delimiter=",", orientation="genes_as_rows")
    assert m.sample_ids == ("s1", "s2") and m.gene_ids == ("g1", "g2")
    assert np.array_equal(m.values, [[1, 2], [4.5, 0]])


def test_parse_log_transform_flag():
    m = parse_expression_matrix("id\tg\ns\t3\n", log_transform=True)
    assert m.values[0, 0] == 2.0 and m.units == "log2tpm"


def test_parse_wide_header_shape():
    genes = [f"ENSG{i}" for i in range(60660)]
    row = "\t".join(["0.5"] * 60660)
    text = "id\t" + "\t".join(genes) + "\n" + "".join(f"s{r}\t{row}\n" for r in range(3))
    assert parse_expression_matrix(text).shape == (3, 60660)


@pytest.mark.parametrize("text,err,row,col", [
    ("id\ta\tb\tc\ns1\t1\t2\n", RaggedRowError, 2, None),
    ("id\ta\tb\ns1\t1\tx\n", NonNumericCellError, 2, 3),
    ("id\ta\tb\ns1\t1\t-2\n", NegativeValueError, 2, 3),
    ("id\ta\ta\ns1\t1\t2\n", DuplicateIdError, 1, None),
    ("id\ta\ns1\t1\ns1\t2\n", DuplicateIdError, 3, 1),
    ("", EmptyInputError, None, None),
    ("id\ta\ns1\t\n", NonNumericCellError, 2, 2),
    ("id\ta\ns1\tnan\n", NonNumericCellError, 2, 2),
])
def test_parse_errors_carry_coordinates(text, err, row, col):
    with pytest.raises(err) as info:
        parse_expression_matrix(text)
    if row is not None:
        assert info.value.row == row
    if col is not None:
        assert info.value.column == col


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2 ** 31))
def test_serialize_round_trip_full_precision(n, p, seed):
    rng = np.random.default_rng(seed)
    values = rng.exponential(size=(n, p)) * 10.0 ** rng.integers(-8, 8, size=(n, p))
    m = ExpressionMatrix([f"s{i}" for i in range(n)], [f"g{j}" for j in range(p)], values)
    buf = io.StringIO()
    serialize_expression_matrix(m, buf)
    back = parse_expression_matrix(buf.getvalue())
    assert np.array_equal(back.values, m.values)
    assert back.sample_ids == m.sample_ids and back.gene_ids == m.gene_ids


def test_matrix_invariants():
    with pytest.raises(DataValidationError):
        ExpressionMatrix(["a"], ["g"], [[np.inf]])
    with pytest.raises(DuplicateIdError):
        ExpressionMatrix(["a", "a"], ["g"], [[1.0], [2.0]])
    with pytest.raises(DataValidationError):
        ExpressionMatrix(["a"], ["g", "h"], [[1.0]])
    # derived spaces may be negative
    assert ExpressionMatrix(["a"], ["g"], [[-1.0]], units="standardized").values[0, 0] == -1
    m = ExpressionMatrix(["a"], ["g"], [[1.0]])
    with pytest.raises(ValueError):
        m.values[0, 0] = 5.0


@pytest.mark.parametrize("code,label", [
    ("t2a", StageLabel.EARLY), ("T4", StageLabel.LATE), (" t1c ", StageLabel.EARLY),
    ("t3a", StageLabel.LATE), ("t3B", StageLabel.LATE), ("t2", StageLabel.EARLY),
])
def test_map_stage_label(code, label):
    assert map_stage_label(code) is label


@pytest.mark.parametrize("code", ["t5", "", "t3", "t1", "early"])
def test_map_stage_label_unknown(code):
    with pytest.raises(UnknownStageError):
        map_stage_label(code)


def test_stage_order():
    assert StageLabel.EARLY < StageLabel.LATE
    assert [str(s) for s in StageLabel] == ["Early", "Late"]


def test_labels_file_and_alignment(tmp_path):
    labels = parse_labels("sample\tstage\ns2\tT3a\ns1\tt1c\nsx\tt2\n")
    m = ExpressionMatrix(["s1", "s2", "s3"], ["g"], [[1.0], [2.0], [3.0]])
    with pytest.raises(DataValidationError):
        align_labels(m, labels)
    ds = align_labels(m, labels, drop_unlabeled=True)
    assert ds.matrix.sample_ids == ("s1", "s2")
    assert ds.y.tolist() == [0, 1]
    write_expression_matrix(ds.matrix, tmp_path / "m.tsv")
    write_labels(ds.matrix.sample_ids, ds.y, tmp_path / "l.tsv")
    back = load_dataset(tmp_path / "m.tsv", tmp_path / "l.tsv")
    assert back.y.tolist() == [0, 1] and np.array_equal(back.X, ds.X)


def test_labels_bad_row():
    with pytest.raises(UnknownStageError):
        parse_labels("s1\tt2\ns2\tt9\n")


def test_split_arithmetic_and_determinism():
    y = np.array([0, 1] * 5)
    tr, te = split_indices(y, 0.2, stratified=True, seed=3)
    assert te.size == 2 and tr.size == 8
    tr2, te2 = split_indices(y, 0.2, stratified=True, seed=3)
    assert np.array_equal(te, te2) and np.array_equal(tr, tr2)


def test_split_reference_class_sizes():
    # 184 Early / 302 Late; round(0.2 * 486) = 97 test rows, apportioned 37/60
    y = np.r_[np.zeros(184, int), np.ones(302, int)]
    ds = LabeledDataset(ExpressionMatrix([f"s{i}" for i in range(486)], ["g"],
                                         np.ones((486, 1))), y)
    pair = split(ds, 0.2, stratified=True, seed=0)
    assert pair.test.n_samples == 97
    assert pair.train.class_counts() == {"Early": 147, "Late": 242}
    for c, size in ((0, 184), (1, 302)):
        assert abs(np.sum(pair.test.y == c) - 0.2 * size) < 1
        assert abs(np.sum(pair.train.y == c) / size - 0.8) < 1 / size


def test_split_errors():
    y = np.array([0, 0, 0, 1])
    with pytest.raises(DataValidationError):
        split_indices(y, 1.5)
    with pytest.raises(StratificationError):
        split_indices(y, 0.5, stratified=True)


@settings(max_examples=200, deadline=None)
@given(n=st.integers(4, 10_000), frac=st.floats(0.05, 0.95), test=st.floats(0.05, 0.5),
       seed=st.integers(0, 2 ** 32 - 1))
def test_split_partition_and_stratification(n, frac, test, seed):
    n_late = min(n - 2, max(2, int(frac * n)))
    y = np.zeros(n, dtype=int)
    y[np.random.default_rng(seed).permutation(n)[:n_late]] = 1
    try:
        tr, te = split_indices(y, test, stratified=True, seed=seed)
    except DataValidationError:  # a side or class would be empty
        return
    assert np.array_equal(np.sort(np.concatenate([tr, te])), np.arange(n))
    assert te.size == round_half_up(test * n)
    for c in (0, 1):
        assert abs(np.sum(y[te] == c) - test * np.sum(y == c)) < 1
