"""Grid search with stratified k-fold CV over one of the built-in grids."""

import numpy as np

from stageml.evaluation import GridSpec, grid_search
from stageml.synthetic import planted_signal
from stageml.transform import fit_standardizer

ds = planted_signal(n_samples=150, n_genes=40, n_informative=10, seed=5)
X = fit_standardizer(np.log2(ds.X + 1)).transform(np.log2(ds.X + 1))

grid = GridSpec.builtin("KNN", cv_folds=5)
print("candidates:", grid.size)
res = grid_search(grid, X, ds.y, seed=0)
# stable sort keeps the first of tied candidates first, as the search does
order = np.argsort(-np.asarray(res.mean_scores), kind="stable")[:3]
for i in order:
    print(f"#{i:2d} {res.candidates[i].params}  mean F1 {res.mean_scores[i]:.2f}")
print("chosen:", res.best_spec.params)
