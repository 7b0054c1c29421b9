"""The eight classifiers on one train/test split, with the reported settings."""

import numpy as np

from stageml import classifiers as clf
from stageml.data import split
from stageml.evaluation import SELECTED_PARAMS, confusion, metrics
from stageml.synthetic import planted_signal
from stageml.transform import fit_standardizer

ds = planted_signal(n_samples=240, n_genes=60, n_informative=20, seed=4)
pair = split(ds, 0.25, seed=1)
train, test = pair.train, pair.test
sc = fit_standardizer(np.log2(train.X + 1))
Xtr, Xte = sc.transform(np.log2(train.X + 1)), sc.transform(np.log2(test.X + 1))

# LR at C=0.001 is heavily regularised; with no class balancing it
# predicts the majority class on this data
for kind in clf.KINDS:
    params = SELECTED_PARAMS.get(kind, {})
    model = clf.fit(clf.ClassifierSpec(kind, params), Xtr, train.y, seed=0)
    rep = metrics(confusion(test.y, clf.predict(model, Xte)))
    print(f"{kind:4s} weighted F1 {rep.weighted['f1']:6.2f}  converged={model.converged}")
