"""Incomplete beta, t-test, fold change, DEG table, ANOVA F and SelectFpr."""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stageml.data import ExpressionMatrix, LabeledDataset
from stageml.de import (P_FLOOR, RegulationStatus, deg_analysis, log2_fold_change,
                        two_sample_t, volcano_export, write_volcano_csv)
from stageml.errors import DataValidationError, EmptySelectionError, SingleClassError
from stageml.selection import (FprSelector, anova_f_classif, f_classif_arrays, project,
                               select_fpr)
from stageml.special import betainc, f_sf, t_sf_two_sided

mpmath.mp.dps = 40


@settings(max_examples=200, deadline=None)
@given(a=st.floats(0.05, 500), b=st.floats(0.05, 500), x=st.floats(0, 1))
def test_betainc_matches_mpmath(a, b, x):
    ref = float(mpmath.betainc(a, b, 0, x, regularized=True))
    got = float(betainc(np.array([a]), np.array([b]), np.array([x]))[0])
    assert got == pytest.approx(ref, rel=1e-10, abs=1e-300)


def test_t_tail_extremes():
    # far tail keeps relative accuracy (no 1 - x cancellation)
    t = 40.0
    ref = float(2 * mpmath.betainc(5, 0.5, 0, 10 / (10 + t * t), regularized=True) / 2)
    assert float(t_sf_two_sided(np.array([t]), np.array([10.0]))[0]) == pytest.approx(ref, rel=1e-10)
    assert float(t_sf_two_sided(np.array([0.0]), np.array([7.0]))[0]) == 1.0


def test_f_sf_against_mpmath():
    rng = np.random.default_rng(0)
    for _ in range(50):
        f, d1, d2 = rng.exponential(3), int(rng.integers(1, 10)), int(rng.integers(2, 200))
        x = mpmath.mpf(d2) / (d2 + d1 * mpmath.mpf(f))
        ref = float(mpmath.betainc(mpmath.mpf(d2) / 2, mpmath.mpf(d1) / 2, 0, x, regularized=True))
        got = float(f_sf(np.array([f]), d1, d2)[0])
        assert got == pytest.approx(ref, rel=1e-10)


def test_t_test_variants_and_symmetry():
    rng = np.random.default_rng(1)
    a, b = rng.normal(0, 1, 9), rng.normal(1, 3, 14)
    for v in ("pooled", "welch"):
        t1, p1 = two_sample_t(a, b, v)
        t2, p2 = two_sample_t(b, a, v)
        assert t1 == pytest.approx(-t2, rel=1e-14) and p1 == pytest.approx(p2, rel=1e-14)
    # equal sizes: pooled and Welch share the same t
    a, b = rng.normal(size=10), rng.normal(size=10)
    assert two_sample_t(a, b, "pooled")[0] == pytest.approx(two_sample_t(a, b, "welch")[0])


def test_t_test_degenerate_cases():
    assert two_sample_t([2, 2, 2], [2, 2]) == (0.0, 1.0)
    t, p = two_sample_t([1, 1, 1], [3, 3, 3])
    assert t < -1e300 and p == P_FLOOR
    # 0.1 * 3 rounds; exact constancy must still be detected
    t, p = two_sample_t([0.1, 0.1, 0.1], [0.1, 0.1, 0.1])
    assert (t, p) == (0.0, 1.0)
    with pytest.raises(DataValidationError):
        two_sample_t([1.0], [1.0, 2.0])
    with pytest.raises(DataValidationError):
        two_sample_t([1.0, np.nan], [1.0, 2.0])
    with pytest.raises(ValueError):
        two_sample_t([1, 2], [3, 4], "paired")


def test_log2_fold_change():
    assert log2_fold_change(3, 1.5, 1e-9) == pytest.approx(1.0, abs=1e-6)
    assert log2_fold_change(0, 0, 0) == 0.0
    assert log2_fold_change(0, 0) == 0.0
    assert log2_fold_change(8.0, 1.0, 0.0) == 3.0
    assert np.isneginf(log2_fold_change(0.0, 4.0, 0.0))
    with pytest.raises(ValueError):
        log2_fold_change(1, 1, -1)


def _deg_dataset():
    # genes 0-4: Late mean 4x Early, low variance; the rest identical in distribution
    rng = np.random.default_rng(2)
    y = np.r_[np.zeros(10, int), np.ones(10, int)]
    X = rng.uniform(9.5, 10.5, size=(20, 20))
    X[y == 1, :5] = rng.uniform(39.5, 40.5, size=(10, 5))
    m = ExpressionMatrix([f"s{i}" for i in range(20)], [f"g{j}" for j in range(20)], X)
    return LabeledDataset(m, y), X, y


def test_deg_flags_planted_up_genes():
    ds, X, y = _deg_dataset()
    table = deg_analysis(ds)
    up = [r.gene_id for r in table.records if r.status is RegulationStatus.UP]
    assert up == [f"g{j}" for j in range(5)]
    for r in table.records[:5]:
        assert abs(r.log2fc - 2.0) < 0.05
    assert table.counts() == {"up": 5, "down": 0, "ns": 15}
    # t per gene matches the standalone test
    assert table.records[7].t_stat == pytest.approx(
        two_sample_t(X[y == 1, 7], X[y == 0, 7])[0], rel=1e-12)


def test_deg_thresholds_are_strict():
    ds, _, _ = _deg_dataset()
    assert deg_analysis(ds, lfc_threshold=2.5).counts()["up"] == 0
    assert deg_analysis(ds, alpha=1e-300).counts()["up"] == 0


def test_deg_single_class():
    m = ExpressionMatrix(["a", "b"], ["g"], [[1.0], [2.0]])
    with pytest.raises(SingleClassError):
        deg_analysis(LabeledDataset(m, [0, 0]))


def test_volcano_export(tmp_path):
    ds, _, _ = _deg_dataset()
    table = deg_analysis(ds)
    rows = volcano_export(table)
    assert len(rows) == 20
    for row, rec in zip(rows, table.records):
        assert row[0] == rec.gene_id and row[1] == rec.log2fc
        assert row[2] == pytest.approx(-math.log10(max(rec.p_value, P_FLOOR)))
        assert row[3] == str(rec.status)
    write_volcano_csv(table, tmp_path / "v.csv")
    lines = (tmp_path / "v.csv").read_text().splitlines()
    assert len(lines) == 21


def test_anova_two_class_identity_example():
    rng = np.random.default_rng(3)
    a = rng.normal(0, 1, 20)
    b = rng.normal(10, 1, 20)
    X = np.r_[a, b][:, None]
    y = np.r_[np.zeros(20, int), np.ones(20, int)]
    F, p, _ = f_classif_arrays(X, y)
    t, pt = two_sample_t(a, b)
    assert F[0] == pytest.approx(t * t, rel=1e-12)
    assert p[0] == pytest.approx(pt, rel=1e-9, abs=1e-300)
    F, _, _ = f_classif_arrays(np.array([[1.0], [2], [3], [4], [5], [6]]), [0, 0, 0, 1, 1, 1])
    assert F[0] == pytest.approx(13.5, rel=1e-13)  # t = -3/sqrt(2/3), t^2 = 13.5


def test_anova_three_classes_against_brute_force():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(30, 3))
    y = np.repeat([0, 1, 2], 10)
    X[y == 2] += 1.0
    F, p, _ = f_classif_arrays(X, y)
    for j in range(3):
        groups = [X[y == c, j] for c in range(3)]
        grand = X[:, j].mean()
        ssb = sum(len(g) * (g.mean() - grand) ** 2 for g in groups)
        ssw = sum(((g - g.mean()) ** 2).sum() for g in groups)
        f_ref = (ssb / 2) / (ssw / 27)
        assert F[j] == pytest.approx(f_ref, rel=1e-12)
        x = mpmath.mpf(27) / (27 + 2 * mpmath.mpf(f_ref))
        assert p[j] == pytest.approx(float(mpmath.betainc(13.5, 1, 0, x, regularized=True)),
                                     rel=1e-9)


def test_anova_degenerate_columns():
    X = np.array([[1.0, 0.0, 1.0], [1.0, 0.0, 2.0], [1.0, 5.0, 3.0], [1.0, 5.0, 5.0]])
    F, p, deg = f_classif_arrays(X, [0, 0, 1, 1])
    assert (F[0], p[0]) == (0.0, 1.0) and np.isinf(F[1]) and p[1] == 0.0
    assert deg.tolist() == [True, True, False]


def test_select_fpr_strict_and_ordered():
    rng = np.random.default_rng(5)
    y = np.r_[np.zeros(30, int), np.ones(30, int)]
    X = rng.normal(size=(60, 50))
    X[y == 1, 10] += 2
    X[y == 1, 3] -= 2
    m = ExpressionMatrix([f"s{i}" for i in range(60)], [f"g{j}" for j in range(50)], X,
                         units="standardized")
    scores = anova_f_classif(LabeledDataset(m, y))
    mask = select_fpr(scores, 0.05)
    assert {3, 10} <= set(mask.kept_indices)
    assert list(mask.kept_indices) == sorted(mask.kept_indices)
    assert all(scores[i].p_value < 0.05 for i in mask.kept_indices)
    sub = project(m, mask)
    assert sub.gene_ids == tuple(f"g{i}" for i in mask.kept_indices)
    # a p-value exactly at alpha is excluded
    cut = scores[10].p_value
    assert 10 not in select_fpr(scores, cut).kept_indices
    with pytest.raises(EmptySelectionError):
        project(m, select_fpr(scores, 1e-300))
    sel = FprSelector(0.05).fit(X, y)
    assert sel.kept_.tolist() == list(mask.kept_indices)
    assert np.array_equal(sel.transform(X), X[:, sel.kept_])
