"""Differential expression on synthetic TPM data: t-test, log2 fold change,
Up/Down calls and volcano coordinates."""

import numpy as np

from stageml.de import deg_analysis, volcano_export
from stageml.synthetic import planted_signal

ds = planted_signal(n_samples=120, n_genes=300, n_informative=20, shift=1.5, seed=1)
print("samples per class:", ds.class_counts())

table = deg_analysis(ds, alpha=0.05, lfc_threshold=1.0)
print("calls:", table.counts())

# first 10 informative genes go up in Late, the next 10 go down
for rec in table.records[:3] + table.records[10:13]:
    print(f"{rec.gene_id}  log2FC {rec.log2fc:+.2f}  p {rec.p_value:.2e}  {rec.status}")

# volcano rows: gene, log2FC, -log10 p, call
rows = volcano_export(table)
top = sorted(rows, key=lambda r: -r[2])[:5]
print("most significant:", [r[0] for r in top])
print("max -log10 p:", round(float(np.max([r[2] for r in rows])), 1))
