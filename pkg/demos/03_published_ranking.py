"""Average Friedman ranks over a published results table.

Sixteen approaches scored on six labels of the Hurricane Sandy tweets.
Run:  python demos/03_published_ranking.py
"""

import sys
from pathlib import Path

import numpy as np

from moralex.ranking import ScoreMatrix, bonferroni_dunn, friedman_test

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
from published import SANDY_OVERSAMPLED, TRAITS  # noqa: E402

names = list(SANDY_OVERSAMPLED)
matrix = ScoreMatrix(names, list(TRAITS), np.array([SANDY_OVERSAMPLED[n] for n in names]))
result = friedman_test(matrix)
print(f"Friedman chi2 = {result.statistic:.2f} on {result.dof} dof, p = {result.p_value:.2g}")

dunn = bonferroni_dunn(result, "Baseline: Frequency MFD")
print(f"critical difference at alpha 0.05: {dunn.cd:.2f} ranks (only {result.n_conditions} labels)")
for name in sorted(names, key=result.rank_of):
    mark = "*" if dunn.better(name) else ""
    print(f"  {result.rank_of(name):5.2f}{mark:1s}  {np.mean(SANDY_OVERSAMPLED[name]):5.1f}  {name}")
