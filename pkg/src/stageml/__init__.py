"""Prostate cancer stage classification from RNA-seq expression.

Modules
-------
data        expression matrices, stage labels, train/test splits
de          differential expression (t-test, log2 fold change)
selection   ANOVA F scoring and false-positive-rate selection
transform   standardization, PCA, FastICA
augment     SMOTE, stochastic feature augmentation, Gaussian expansion
classifiers eight binary classifiers behind one interface
evaluation  confusion matrices, weighted metrics, k-fold CV, grid search
pipeline    leakage-guarded staged pipeline and repeated trials
reports     report files and run manifests
cli         command-line entry point
"""

__version__ = "0.1.0"
