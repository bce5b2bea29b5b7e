"""Friedman average ranks and Bonferroni-Dunn comparison against a baseline.

Scores are "higher is better". Each condition (column) ranks the methods
(rows) from 1 = best, with tied methods sharing the mean of their positions.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import special, stats


@dataclass
class ScoreMatrix:
    methods: list[str]
    conditions: list[str]
    scores: np.ndarray

    def __post_init__(self):
        self.methods = list(self.methods)
        self.conditions = list(self.conditions)
        self.scores = np.asarray(self.scores, dtype=float)
        if self.scores.shape != (len(self.methods), len(self.conditions)):
            raise ValueError("score matrix shape does not match its labels")
        if len(self.methods) < 2 or len(self.conditions) < 2:
            raise ValueError("need at least 2 methods and 2 conditions")
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("score matrix has missing or non-finite cells")
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("duplicate method names")

    @classmethod
    def from_reports(cls, reports, unit: str = "trait") -> "ScoreMatrix":
        """Build from EvalReports: one column per trait, or per (trait, fold)."""
        traits = [t for t in reports[0].traits if all(t in r.fold_f1 for r in reports)]
        rows = []
        for r in reports:
            if unit == "trait":
                rows.append([r.mean_f1[t] for t in traits])
            elif unit == "fold":
                rows.append([s for t in traits for s in r.fold_f1[t]])
            else:
                raise ValueError(f"unknown ranking unit {unit!r}")
        if unit == "trait":
            conds = traits
        else:
            conds = [f"{t}:{i}" for t in traits for i in range(len(reports[0].fold_f1[t]))]
        return cls([r.method for r in reports], conds, np.array(rows))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", *self.conditions])
        for m, row in zip(self.methods, self.scores):
            w.writerow([m, *(repr(float(x)) for x in row)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ScoreMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty score matrix")
        header, body = rows[0], [r for r in rows[1:] if r]
        for i, r in enumerate(body, start=2):
            if len(r) != len(header):
                raise ValueError(f"line {i}: expected {len(header)} cells, got {len(r)}")
        return cls([r[0] for r in body], header[1:], np.array([[float(x) for x in r[1:]] for r in body]))


def average_ranks(m: ScoreMatrix) -> np.ndarray:
    """Mean rank of each method over the conditions (1 = best, midranks for ties)."""
    ranks = np.apply_along_axis(stats.rankdata, 0, -m.scores)
    return ranks.mean(axis=1)


@dataclass
class RankResult:
    methods: list[str]
    avg_ranks: np.ndarray
    statistic: float
    dof: int
    p_value: float
    n_conditions: int
    variant: str = "chi2"

    @property
    def k(self) -> int:
        return len(self.methods)

    def rank_of(self, method: str) -> float:
        return float(self.avg_ranks[self.methods.index(method)])


def chi2_sf(x: float, dof: int) -> float:
    """Chi-square survival function via the regularized upper incomplete gamma."""
    if x <= 0:
        return 1.0
    return float(special.gammaincc(dof / 2.0, x / 2.0))


def friedman_test(m: ScoreMatrix, variant: str = "chi2") -> RankResult:
    """Friedman test on average ranks.

    ``variant="chi2"`` is the chi-square statistic with k-1 degrees of
    freedom; ``variant="iman-davenport"`` its F correction with
    (k-1, (k-1)(N-1)) degrees of freedom.
    """
    k = len(m.methods)
    n = len(m.conditions)
    r = average_ranks(m)
    chi2 = 12.0 * n / (k * (k + 1)) * (np.sum(r**2) - k * (k + 1) ** 2 / 4.0)
    chi2 = max(float(chi2), 0.0)
    if abs(chi2) < 1e-12:
        chi2 = 0.0
    if variant == "chi2":
        p = chi2_sf(chi2, k - 1)
        return RankResult(m.methods, r, chi2, k - 1, p, n, variant)
    if variant == "iman-davenport":
        denom = n * (k - 1) - chi2
        if denom <= 0:
            return RankResult(m.methods, r, math.inf, k - 1, 0.0, n, variant)
        f = (n - 1) * chi2 / denom
        p = float(stats.f.sf(f, k - 1, (k - 1) * (n - 1))) if f > 0 else 1.0
        return RankResult(m.methods, r, float(f), k - 1, p, n, variant)
    raise ValueError(f"unknown Friedman variant {variant!r}")


@dataclass
class DunnResult:
    baseline: str
    alpha: float
    q_alpha: float
    cd: float
    differences: dict      # method -> baseline rank - method rank (positive: method is better)
    significant: dict      # method -> |difference| > cd

    def better(self, method: str) -> bool:
        return self.significant[method] and self.differences[method] > 0


def dunn_q(alpha: float, k: int) -> float:
    """Two-sided Bonferroni-corrected normal quantile for k-1 comparisons."""
    if k < 2:
        raise ValueError("need at least two methods")
    return float(stats.norm.isf(alpha / (2 * (k - 1))))


def critical_difference(k: int, n: int, alpha: float = 0.05) -> float:
    return dunn_q(alpha, k) * math.sqrt(k * (k + 1) / (6.0 * n))


def bonferroni_dunn(result: RankResult, baseline: str, alpha: float = 0.05) -> DunnResult:
    if result.k < 2:
        raise ValueError("Bonferroni-Dunn needs at least two methods")
    if baseline not in result.methods:
        raise KeyError(f"unknown baseline {baseline!r}")
    q = dunn_q(alpha, result.k)
    cd = q * math.sqrt(result.k * (result.k + 1) / (6.0 * result.n_conditions))
    base = result.rank_of(baseline)
    diffs = {m: base - float(r) for m, r in zip(result.methods, result.avg_ranks)}
    sig = {m: (m != baseline and abs(d) > cd) for m, d in diffs.items()}
    return DunnResult(baseline, alpha, q, cd, diffs, sig)


# -- tables -----------------------------------------------------------------

TRAIT_ABBREV = {
    "care": "C/H", "fairness": "F/C", "loyalty": "L/B",
    "authority": "A/S", "purity": "P/D", "non-moral": "NM",
}


@dataclass
class ComparisonTable:
    header: list[str]
    rows: list[list[str]]

    def to_text(self) -> str:
        widths = [max(len(r[i]) for r in [self.header] + self.rows) for i in range(len(self.header))]
        def fmt(r):
            return "  ".join(c.ljust(widths[0]) if i == 0 else c.rjust(widths[i]) for i, c in enumerate(r))
        lines = [fmt(self.header), "-" * len(fmt(self.header))]
        lines += [fmt(r) for r in self.rows]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        w.writerows(self.rows)
        return buf.getvalue()


def render_comparison_table(
    reports,
    baseline: str,
    sota_scores: Optional[Mapping[str, Mapping[str, float]]] = None,
    alpha: float = 0.05,
    unit: str = "trait",
    percent: bool = True,
) -> ComparisonTable:
    """Methods as rows, traits as columns, plus average and Friedman rank.

    ``*`` marks methods whose rank beats the baseline significantly and
    ``†`` those beating every supplied SOTA row, both by Bonferroni-Dunn.
    SOTA rows are constants (trait -> F1 in [0, 1]); they join the ranking
    when they cover every trait and ``unit="trait"``.
    """
    sota_scores = dict(sota_scores or {})
    traits = [t for t in reports[0].traits if all(t in r.fold_f1 for r in reports)]
    scale = 100.0 if percent else 1.0

    rows_scores = {r.method: [r.mean_f1[t] for t in traits] for r in reports}
    ranked_sota = [s for s, v in sota_scores.items() if unit == "trait" and all(t in v for t in traits)]

    ranks = {}
    marks = {m: "" for m in rows_scores}
    if len(reports) + len(ranked_sota) >= 2 and len(traits) >= 2:
        if unit == "trait":
            names = list(rows_scores) + ranked_sota
            data = [rows_scores[m] for m in rows_scores] + [[sota_scores[s][t] for t in traits] for s in ranked_sota]
            matrix = ScoreMatrix(names, traits, np.array(data))
        else:
            matrix = ScoreMatrix.from_reports(reports, unit=unit)
        result = friedman_test(matrix)
        ranks = dict(zip(matrix.methods, result.avg_ranks))
        if baseline in ranks:
            d = bonferroni_dunn(result, baseline, alpha)
            for m in rows_scores:
                if m != baseline and d.better(m):
                    marks[m] += "*"
        if ranked_sota:
            duns = [bonferroni_dunn(result, s, alpha) for s in ranked_sota]
            for m in rows_scores:
                if all(d.better(m) for d in duns):
                    marks[m] += "†"

    header = ["Approach"] + [TRAIT_ABBREV.get(t, t) for t in traits] + ["Avg.", "Rank"]
    rows = []

    def row(name, vals, mark=""):
        cells = [("-" if v is None else f"{scale * v:.1f}") for v in vals]
        present = [v for v in vals if v is not None]
        avg = f"{scale * np.mean(present):.1f}" if present else "-"
        rank = f"{ranks[name]:.1f}{mark}" if name in ranks else "-"
        return [name] + cells + [avg, rank]

    for m, vals in rows_scores.items():
        rows.append(row(m, vals, marks[m]))
    for s, v in sota_scores.items():
        rows.append(row(s, [v.get(t) for t in traits]))
    return ComparisonTable(header, rows)
