import csv
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stageml import augment as aug
from stageml.data import ExpressionMatrix, LabeledDataset
from stageml.errors import DataValidationError, HyperparameterError, SingleClassError


def _dataset(n_early, n_late, p=4, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.exponential(size=(n_early + n_late, p))
    y = np.r_[np.zeros(n_early, int), np.ones(n_late, int)]
    m = ExpressionMatrix([f"s{i}" for i in range(len(y))], [f"g{j}" for j in range(p)], X)
    return LabeledDataset(m, y)


def test_smote_ratio_target():
    ds = _dataset(10, 40)
    X, y, prov, _ = aug.smote_arrays(ds.X, ds.y, aug.SmoteParams(target=0.5, seed=1))
    assert np.bincount(y).tolist() == [20, 40] and len(prov) == 10
    # already past the target: nothing added
    X, y, prov, _ = aug.smote_arrays(ds.X, ds.y, aug.SmoteParams(target=0.2))
    assert X.shape[0] == 50 and prov == ()


def test_smote_minority_can_be_late():
    ds = _dataset(30, 8)
    X, y, prov, _ = aug.smote_arrays(ds.X, ds.y, aug.SmoteParams())
    assert np.bincount(y).tolist() == [30, 30]
    assert all(ds.y[p.base_row] == 1 and ds.y[p.neighbor_row] == 1 for p in prov)


def test_smote_k_clamped_with_warning():
    ds = _dataset(3, 12)
    with pytest.warns(aug.AugmentWarning):
        res = aug.smote_with_provenance(ds, aug.SmoteParams(k_neighbors=5))
    assert res.warnings and "k=2" in res.warnings[0]
    assert res.dataset.class_counts() == {"Early": 12, "Late": 12}


def test_smote_neighbour_is_among_k_nearest():
    ds = _dataset(20, 50, p=3, seed=3)
    k = 3
    _, _, prov, _ = aug.smote_arrays(ds.X, ds.y, aug.SmoteParams(k_neighbors=k, seed=2))
    A = ds.X[:20]
    for p in prov:
        d = ((A - A[p.base_row]) ** 2).sum(axis=1)
        d[p.base_row] = np.inf
        assert p.neighbor_row in np.argsort(d, kind="stable")[:k]


def test_smote_errors_and_params():
    with pytest.raises(SingleClassError):
        aug.smote_arrays(np.ones((4, 2)), np.zeros(4), aug.SmoteParams())
    with pytest.raises(DataValidationError):
        aug.smote_arrays(np.ones((5, 2)), np.array([0, 1, 1, 1, 1]), aug.SmoteParams())
    with pytest.raises(HyperparameterError):
        aug.SmoteParams(k_neighbors=0)
    with pytest.raises(HyperparameterError):
        aug.SmoteParams(target="double")


def test_smote_dataset_ids_units_and_provenance_csv(tmp_path):
    ds = _dataset(5, 9)
    res = aug.smote_with_provenance(ds, aug.SmoteParams(k_neighbors=2, seed=4))
    out = res.dataset
    assert out.matrix.sample_ids[:14] == ds.matrix.sample_ids
    assert out.matrix.sample_ids[14:] == ("smote_1", "smote_2", "smote_3", "smote_4")
    assert out.matrix.units == "tpm"  # convex combinations stay non-negative
    aug.write_provenance_csv(res.provenance, tmp_path / "p.csv")
    rows = list(csv.reader(open(tmp_path / "p.csv")))
    assert rows[0] == ["kind", "base_row", "neighbor_row", "delta_or_sigma"]
    assert float(rows[1][3]) == res.provenance[0].delta_or_sigma


@settings(max_examples=40, deadline=None)
@given(n_min=st.integers(2, 30), n_maj=st.integers(2, 60), k=st.integers(1, 8),
       seed=st.integers(0, 2 ** 31))
def test_smote_property_segment_and_count(n_min, n_maj, k, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n_min + n_maj, 3))
    y = np.r_[np.zeros(n_min, int), np.ones(n_maj, int)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", aug.AugmentWarning)
        Xo, yo, prov, _ = aug.smote_arrays(X, y, aug.SmoteParams(k_neighbors=k, seed=seed))
    counts = np.bincount(yo, minlength=2)
    assert counts.min() == counts.max() == max(n_min, n_maj)
    for i, p in enumerate(prov):
        new = Xo[n_min + n_maj + i]
        assert np.abs(new - (X[p.base_row] + p.delta_or_sigma
                             * (X[p.neighbor_row] - X[p.base_row]))).max() <= 1e-12


def test_sfa_shapes_and_input_untouched():
    Z = np.random.default_rng(1).normal(size=(4, 3))
    keep = Z.copy()
    out = aug.sfa(Z, aug.SFAParams(sigma1=0.1), seed=0)
    assert out.shape == Z.shape and np.array_equal(Z, keep)
    assert not np.array_equal(out, Z)
    one = aug.sfa(Z[0], aug.SFAParams(sigma1=0.1), seed=0)
    assert np.array_equal(one, out[0])  # per-row streams
    with pytest.raises(HyperparameterError):
        aug.SFAParams(sigma1=-1.0)


def test_sfa_mu_shifts_mean():
    z = np.zeros((5000, 2))
    out = aug.sfa(z, aug.SFAParams(mu=2.0, sigma1=0.0, sigma2=0.04), seed=3)
    assert np.all(np.abs(out.mean(axis=0) - 2.0) < 3 * 0.2 / np.sqrt(5000))


def test_gaussian_expand_layout_and_ids():
    ds = _dataset(2, 3, p=2)
    out = aug.gaussian_expand(ds, aug.NoiseParams(factor=3, sigma=0.1), seed=5)
    assert out.n_samples == 15
    assert out.matrix.sample_ids[:5] == ds.matrix.sample_ids
    assert out.matrix.sample_ids[5:7] == ("s0#noise1", "s0#noise2")
    assert np.array_equal(out.y[5:], np.repeat(ds.y, 2))
    assert np.array_equal(out.X[:5], ds.X)


def test_gaussian_absolute_mode_and_identity():
    X = np.random.default_rng(2).normal(size=(300, 2)) * [1.0, 100.0]
    y = np.zeros(300, int)
    Xo, _, _ = aug.gaussian_expand_arrays(X, y, aug.NoiseParams(sigma=0.5, relative=False,
                                                                 factor=2), seed=1)
    noise = Xo[300:] - X
    assert np.all(np.abs(noise.std(axis=0) - 0.5) < 3 * 0.5 / np.sqrt(2 * 299))
    X1, y1, prov = aug.gaussian_expand_arrays(X, y, aug.NoiseParams(factor=1))
    assert np.array_equal(X1, X) and prov == ()
    with pytest.raises(HyperparameterError):
        aug.NoiseParams(factor=0)
    X0, _, _ = aug.gaussian_expand_arrays(X, y, aug.NoiseParams(sigma=0.0, factor=3))
    assert np.array_equal(X0[300:], np.repeat(X, 2, axis=0))


def test_gaussian_per_row_copy_std():
    # the 9 copies of one row have sample std about 0.01 * std_f
    rng = np.random.default_rng(4)
    X = rng.normal(size=(200, 3)) * [2.0, 1.0, 0.5]
    Xo, _, _ = aug.gaussian_expand_arrays(X, np.zeros(200, int), aug.NoiseParams(), seed=6)
    copies = Xo[200:].reshape(200, 9, 3)
    ratio = copies.std(axis=1, ddof=1).mean(axis=0) / (0.01 * X.std(axis=0))
    # mean of 200 sample stds with 8 df: within a few percent of c4 * 1
    assert np.all(np.abs(ratio - 0.9693) < 0.05)
