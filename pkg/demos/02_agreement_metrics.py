"""
Agreement statistics on published confusion matrices
====================================================

Judge-vs-reference agreement for three scale types. Rows are reference
labels, columns are judge labels.
"""

import numpy as np

from rubriceval.metrics import (
    ConfusionMatrix,
    accuracy,
    adjacent_accuracy,
    cohen_kappa,
    mcnemar_exact,
    ordinal_emd,
    precision_recall_f1,
    weighted_kappa,
)

# binary: factual accuracy
factual = ConfusionMatrix.from_counts([[70, 2], [11, 17]], ["MET", "UNMET"])
p, r, f1 = precision_recall_f1(factual, positive=0)
print(f"factual   acc={accuracy(factual):.3f} kappa={cohen_kappa(factual):.3f} P={p:.2f} R={r:.2f}")

# ordinal: exact agreement is low, but most misses are one step away
satisfaction = ConfusionMatrix.from_counts(
    [[16, 4, 0, 0], [3, 7, 8, 15], [0, 1, 0, 27], [0, 0, 0, 19]],
    ["very dissatisfied", "somewhat dissatisfied", "somewhat satisfied", "very satisfied"],
)
print(
    f"satisfied acc={accuracy(satisfaction):.2f} adjacent={adjacent_accuracy(satisfaction):.2f} "
    f"kappa_q={weighted_kappa(satisfaction):.3f}"
)

# the judge piles predictions on the top category; EMD measures how far
# the whole label distribution moved, in scale steps
print("reference marginal:", satisfaction.reference_marginal.astype(int))
print("predicted marginal:", satisfaction.predicted_marginal.astype(int))
print(f"EMD = {ordinal_emd(satisfaction.reference_marginal, satisfaction.predicted_marginal):.3f}")

# nominal: per-class recall shows which categories the judge can see
length = ConfusionMatrix.from_counts([[14, 0, 6], [1, 2, 11], [1, 0, 65]], ["too brief", "too verbose", "just right"])
recalls = [precision_recall_f1(length, i)[1] for i in range(3)]
print("length recall per class:", np.round(recalls, 2), f"kappa={cohen_kappa(length):.3f}")

# paired comparison of two configurations: 54 items improved, 32 got worse
print(f"McNemar exact p = {mcnemar_exact(54, 32):.4f}")

# matrices round-trip through CSV for offline analysis
print(ConfusionMatrix.from_csv(factual.to_csv()).to_csv())
