"""SMOTE balancing, Gaussian expansion and SFA perturbation."""

from stageml import augment as aug
from stageml.synthetic import planted_signal

ds = planted_signal(n_samples=100, n_genes=8, n_informative=4, late_fraction=0.7, seed=3)
print("before:", ds.class_counts())

res = aug.smote_with_provenance(ds, aug.SmoteParams(k_neighbors=5, seed=0))
print("after SMOTE:", res.dataset.class_counts())
p = res.provenance[0]
print(f"first synthetic row: base {p.base_row}, neighbour {p.neighbor_row}, "
      f"delta {p.delta_or_sigma:.3f}")

noisy = aug.gaussian_expand(ds, aug.NoiseParams(sigma=0.01, factor=10), seed=0)
print("Gaussian expansion x10:", noisy.n_samples, "rows;", noisy.matrix.sample_ids[100:102])

Z = aug.sfa(ds.X, aug.SFAParams(sigma1=0.01), seed=0)
rel = abs(Z - ds.X).mean() / abs(ds.X).mean()
print(f"SFA mean relative change: {rel:.4f}")
