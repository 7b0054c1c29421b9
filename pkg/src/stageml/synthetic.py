"""Synthetic expression data with a planted class signal."""

import numpy as np

from .data import ExpressionMatrix, LabeledDataset


def planted_signal(n_samples=300, n_genes=1000, n_informative=40, late_fraction=0.6,
                   shift=0.75, seed=0) -> LabeledDataset:
    """Log-normal "TPM" values where the first ``n_informative`` genes have a
    class-conditional mean shift.

    Gene g has log2 baseline ``b_g ~ U(1, 6)`` and unit noise; Late samples
    add ``+shift`` (first half of the informative genes) or ``-shift``
    (second half) on the log2 scale. Values are ``2**log2 - 1`` clipped at 0,
    so they are non-negative. ``round(late_fraction * n)`` samples are Late.
    """
    rng = np.random.default_rng(seed)
    n_late = int(np.floor(late_fraction * n_samples + 0.5))
    y = np.zeros(n_samples, dtype=np.int64)
    y[rng.permutation(n_samples)[:n_late]] = 1
    base = rng.uniform(1.0, 6.0, size=n_genes)
    log2 = base + rng.standard_normal((n_samples, n_genes))
    signs = np.where(np.arange(n_informative) < n_informative // 2, 1.0, -1.0)
    log2[:, :n_informative] += np.outer(y, signs * shift)
    values = np.maximum(2.0 ** log2 - 1.0, 0.0)
    matrix = ExpressionMatrix(tuple(f"S{i + 1:04d}" for i in range(n_samples)),
                              tuple(f"G{j + 1:05d}" for j in range(n_genes)), values)
    return LabeledDataset(matrix, y)
