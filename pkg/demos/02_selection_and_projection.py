"""ANOVA-F feature selection followed by PCA or ICA, fitted on training rows."""

import numpy as np

from stageml import transform as tf
from stageml.data import split
from stageml.selection import FprSelector
from stageml.synthetic import planted_signal

ds = planted_signal(n_samples=200, n_genes=1000, n_informative=40, seed=2)
pair = split(ds, test_fraction=0.2, seed=0)
train, test = pair.train, pair.test
Xtr, Xte = np.log2(train.X + 1), np.log2(test.X + 1)

scaler = tf.fit_standardizer(Xtr)
Ztr, Zte = scaler.transform(Xtr), scaler.transform(Xte)

sel = FprSelector(alpha=0.05).fit(Ztr, train.y)
print(f"SelectFpr kept {sel.kept_.size} of {Ztr.shape[1]} genes")
print("informative genes among them:", int(np.sum(sel.kept_ < 40)), "of 40")

pca = tf.pca_fit(sel.transform(Ztr), 10)
share = pca.explained_variance / pca.explained_variance.sum()
print("PCA variance share of first 3 (within 10):", np.round(share[:3], 3))

ica = tf.ica_fit(sel.transform(Ztr), 10, seed=0)
print("ICA converged:", ica.converged, "after", ica.iterations_used, "iterations")
S = ica.transform(sel.transform(Zte))
print("ICA test scores shape:", S.shape)
