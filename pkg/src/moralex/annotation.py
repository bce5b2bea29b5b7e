"""Quality control and agreement statistics for crowdsourced Likert ratings.

Raters score each word on 9-point scales (valence, arousal, moral valence).
Raters are screened on gold words with known normative valence, surviving
ratings are aggregated per word, and the collection is scored with Gwet's
AC2, Pearson correlation against a normative lexicon, and Cohen's kappa
against binary MFD polarity.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from typing import Hashable, Iterable, Optional, Sequence

import numpy as np

from .lexicon import NEUTRAL, Lexicon, Polarity, Trait


class UndefinedMetricError(ValueError):
    """Raised when an agreement statistic has no defined value for the input."""


@dataclass(frozen=True)
class RatingRecord:
    annotator_id: str
    word: str
    trait: Trait
    relevant: bool = True
    valence: Optional[float] = None
    arousal: Optional[float] = None
    moral_valence: Optional[float] = None

    def __post_init__(self):
        scores = (self.valence, self.arousal, self.moral_valence)
        if not self.relevant:
            if any(s is not None for s in scores):
                raise ValueError(f"{self.annotator_id}/{self.word}: irrelevant rating carries scores")
            return
        for s in scores:
            if s is not None and not 1.0 <= s <= 9.0:
                raise ValueError(f"{self.annotator_id}/{self.word}: score {s} outside 1-9")


@dataclass(frozen=True)
class GoldWord:
    word: str
    gold_valence_mean: float
    gold_valence_sd: float

    def __post_init__(self):
        if not self.gold_valence_sd > 0:
            raise ValueError(f"gold word {self.word!r} needs a positive sd")


@dataclass(frozen=True)
class AnnotatorVerdict:
    accepted: bool
    failed_count: int
    checked: int


@dataclass(frozen=True)
class AggregatedRating:
    word: str
    trait: Trait
    n_raters: int
    mean_moral_valence: float
    sd_moral_valence: float
    mean_valence: Optional[float]
    flagged: bool = False


def validate_annotator(
    records: Iterable[RatingRecord],
    golds: Iterable[GoldWord],
    sd_bound: float = 1.5,
    max_failures: int = 1,
) -> AnnotatorVerdict:
    """Screen one annotator on the gold words they rated.

    A gold answer is valid when its valence lies within ``sd_bound`` normative
    SDs of the normative mean (boundary included). The annotator is rejected
    when more than ``max_failures`` gold answers are invalid. Golds the
    annotator did not rate are ignored.
    """
    by_word = {}
    for r in records:
        by_word.setdefault(r.word, r)
    failed = checked = 0
    for g in golds:
        r = by_word.get(g.word)
        if r is None:
            continue
        checked += 1
        if r.valence is None or abs(r.valence - g.gold_valence_mean) > sd_bound * g.gold_valence_sd:
            failed += 1
    if checked == 0:
        raise ValueError("annotator rated no gold words")
    return AnnotatorVerdict(accepted=failed <= max_failures, failed_count=failed, checked=checked)


def screen_annotators(records: Iterable[RatingRecord], golds: Sequence[GoldWord], **kwargs) -> dict[str, AnnotatorVerdict]:
    """Run :func:`validate_annotator` for every annotator seen in ``records``."""
    per_annotator = defaultdict(list)
    for r in records:
        per_annotator[r.annotator_id].append(r)
    gold_words = {g.word for g in golds}
    out = {}
    for ann, recs in sorted(per_annotator.items()):
        if gold_words.intersection(r.word for r in recs):
            out[ann] = validate_annotator(recs, golds, **kwargs)
    return out


def aggregate_ratings(
    records: Iterable[RatingRecord],
    accepted: Optional[Iterable[str]] = None,
    min_raters: int = 1,
    exclude_words: Iterable[str] = (),
) -> list[AggregatedRating]:
    """Mean and population SD of moral valence per (word, trait).

    Only records of ``accepted`` annotators (all, if None) that were judged
    relevant and carry a moral valence count. Words with fewer than
    ``min_raters`` ratings are kept but flagged.
    """
    accepted = None if accepted is None else set(accepted)
    exclude = set(exclude_words)
    moral = defaultdict(list)
    valence = defaultdict(list)
    for r in records:
        if accepted is not None and r.annotator_id not in accepted:
            continue
        if not r.relevant or r.moral_valence is None or r.word in exclude:
            continue
        moral[(r.word, r.trait)].append(r.moral_valence)
        if r.valence is not None:
            valence[(r.word, r.trait)].append(r.valence)

    out = []
    for (word, trait), vals in sorted(moral.items(), key=lambda kv: (kv[0][1].value, kv[0][0])):
        arr = np.asarray(vals, dtype=float)
        vv = valence.get((word, trait))
        out.append(AggregatedRating(
            word=word,
            trait=trait,
            n_raters=len(vals),
            mean_moral_valence=float(arr.mean()),
            sd_moral_valence=float(arr.std()),
            mean_valence=float(np.mean(vv)) if vv else None,
            flagged=len(vals) < min_raters,
        ))
    return out


# -- rating matrices --------------------------------------------------------

@dataclass
class RatingMatrix:
    """Words x annotators, with NaN where an annotator did not rate a word."""

    words: list[str]
    annotators: list[str]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.words), len(self.annotators)):
            raise ValueError("matrix shape does not match its labels")

    @classmethod
    def from_records(cls, records: Iterable[RatingRecord], field: str = "moral_valence") -> "RatingMatrix":
        cells = {}
        for r in records:
            value = getattr(r, field)
            if r.relevant and value is not None:
                cells[(r.word, r.annotator_id)] = value
        words = sorted({w for w, _ in cells})
        anns = sorted({a for _, a in cells})
        wi = {w: i for i, w in enumerate(words)}
        ai = {a: j for j, a in enumerate(anns)}
        values = np.full((len(words), len(anns)), np.nan)
        for (w, a), v in cells.items():
            values[wi[w], ai[a]] = v
        return cls(words, anns, values)


def discard_annotators(matrix: RatingMatrix, annotator_ids: Iterable[str]) -> RatingMatrix:
    drop = set(annotator_ids)
    unknown = drop.difference(matrix.annotators)
    if unknown:
        raise KeyError(f"unknown annotators: {', '.join(sorted(unknown))}")
    keep = [j for j, a in enumerate(matrix.annotators) if a not in drop]
    return RatingMatrix(
        list(matrix.words), [matrix.annotators[j] for j in keep], matrix.values[:, keep]
    )


def quadratic_weights(categories: Sequence[float]) -> np.ndarray:
    cats = np.asarray(categories, dtype=float)
    span = cats.max() - cats.min()
    return 1.0 - (cats[:, None] - cats[None, :]) ** 2 / span**2


def gwet_ac2(
    ratings,
    categories: Sequence[float] = tuple(range(1, 10)),
    weights: str | np.ndarray = "quadratic",
) -> float:
    """Gwet's weighted agreement coefficient for any number of raters.

    ``ratings`` is a words x raters array (or :class:`RatingMatrix`) with NaN
    for missing cells; raters per word may vary. Observed agreement averages
    over words with at least two ratings; chance agreement uses the category
    distribution of every rated word.
    """
    values = ratings.values if isinstance(ratings, RatingMatrix) else np.asarray(ratings, dtype=float)
    cats = np.asarray(categories, dtype=float)
    q = len(cats)
    if isinstance(weights, str):
        if weights == "quadratic":
            w = quadratic_weights(cats)
        elif weights == "identity":
            w = np.eye(q)
        else:
            raise ValueError(f"unknown weighting {weights!r}")
    else:
        w = np.asarray(weights, dtype=float)

    # counts[i, k]: raters placing word i in category k
    present = ~np.isnan(values)
    idx = np.full(values.shape, -1)
    for k, c in enumerate(cats):
        idx[present & np.isclose(values, c)] = k
    if np.any(present & (idx < 0)):
        raise ValueError("ratings outside the category set")
    counts = np.zeros((values.shape[0], q))
    for k in range(q):
        counts[:, k] = (idx == k).sum(axis=1)

    r_i = counts.sum(axis=1)
    multi = r_i >= 2
    if multi.sum() == 0:
        raise UndefinedMetricError("no word was rated by two or more annotators")
    weighted = counts @ w.T
    pa = np.sum(counts[multi] * (weighted[multi] - 1), axis=1) / (r_i[multi] * (r_i[multi] - 1))
    p_a = pa.mean()

    rated = r_i >= 1
    pi = (counts[rated] / r_i[rated, None]).mean(axis=0)
    p_e = w.sum() / (q * (q - 1)) * np.sum(pi * (1 - pi))
    return float((p_a - p_e) / (1 - p_e))


def cohens_kappa(labels_a: Sequence[Hashable], labels_b: Sequence[Hashable]) -> float:
    """Cohen's kappa for two raters. Returns 1.0 when chance agreement is 1."""
    if len(labels_a) != len(labels_b) or not labels_a:
        raise ValueError("label lists must be non-empty and of equal length")
    cats = sorted(set(labels_a) | set(labels_b), key=repr)
    pos = {c: i for i, c in enumerate(cats)}
    table = np.zeros((len(cats), len(cats)))
    for a, b in zip(labels_a, labels_b):
        table[pos[a], pos[b]] += 1
    table /= table.sum()
    p_o = np.trace(table)
    p_e = float(table.sum(axis=1) @ table.sum(axis=0))
    if np.isclose(p_e, 1.0):
        return 1.0
    return float((p_o - p_e) / (1 - p_e))


def pearson_corr(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("need two equal-length sequences of at least 2 values")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = dx @ dx
    syy = dy @ dy
    if sxx == 0 or syy == 0:
        raise UndefinedMetricError("correlation undefined for a constant sequence")
    r = (dx @ dy) / np.sqrt(sxx * syy)
    return float(np.clip(r, -1.0, 1.0))


def binarize_ratings(aggregated: Iterable[AggregatedRating]) -> list[tuple[str, Polarity]]:
    """Map mean moral valence to vice (< 5) or virtue (> 5); exact 5 is dropped."""
    out = []
    for a in aggregated:
        if a.mean_moral_valence > NEUTRAL:
            out.append((a.word, Polarity.VIRTUE))
        elif a.mean_moral_valence < NEUTRAL:
            out.append((a.word, Polarity.VICE))
    return out


# -- the per-trait quality report ------------------------------------------

@dataclass(frozen=True)
class AgreementRow:
    trait: Trait
    inter_annotator: Optional[float]
    warr_correlation: Optional[float]
    mfd_agreement: Optional[float]
    n_words: int
    n_rejected: int


AGREEMENT_COLUMNS = ("trait", "inter_annotator", "warr_correlation", "mfd_agreement")


def agreement_report(
    records: Sequence[RatingRecord],
    golds: Sequence[GoldWord],
    mfd: Optional[Lexicon] = None,
    normative: Optional[dict[str, float]] = None,
    discard: Iterable[str] = (),
) -> list[AgreementRow]:
    """Screen, aggregate and score ratings per trait.

    The three scores are AC2 on moral valence, Pearson between mean valence
    and ``normative`` valence, and kappa between binarized means and the MFD
    polarity of the same trait. A score is None when undefined for the data.
    """
    verdicts = screen_annotators(records, golds)
    rejected = {a for a, v in verdicts.items() if not v.accepted}
    dropped = rejected | set(discard)
    gold_words = {g.word for g in golds}
    rows = []
    traits = sorted({r.trait for r in records}, key=lambda t: t.value)
    for trait in traits:
        recs = [r for r in records if r.trait is trait and r.annotator_id not in dropped and r.word not in gold_words]
        agg = aggregate_ratings(recs)

        matrix = RatingMatrix.from_records(recs)
        try:
            ac2 = gwet_ac2(matrix)
        except (UndefinedMetricError, ValueError):
            ac2 = None

        corr = None
        if normative:
            pairs = [(a.mean_valence, normative[a.word]) for a in agg
                     if a.mean_valence is not None and a.word in normative]
            if len(pairs) >= 2:
                try:
                    corr = pearson_corr([p[0] for p in pairs], [p[1] for p in pairs])
                except UndefinedMetricError:
                    corr = None

        kappa = None
        if mfd is not None:
            ours, theirs = [], []
            for word, pol in binarize_ratings(agg):
                ref = mfd.lookup(word, by="polarity").get(trait)
                if ref is None or ref == NEUTRAL:
                    continue
                ours.append(pol)
                theirs.append(Polarity.VIRTUE if ref > NEUTRAL else Polarity.VICE)
            if ours:
                kappa = cohens_kappa(ours, theirs)

        n_rej = len({r.annotator_id for r in records if r.trait is trait} & dropped)
        rows.append(AgreementRow(trait, ac2, corr, kappa, len(agg), n_rej))
    return rows


# -- file readers -----------------------------------------------------------

def _opt(text: str) -> Optional[float]:
    text = (text or "").strip()
    return float(text) if text else None


def _truthy(text: str) -> bool:
    return (text or "").strip().lower() in ("1", "true", "yes", "y", "t")


def load_ratings(path) -> list[RatingRecord]:
    """Read ``annotator_id,word,trait,relevant,valence,arousal,moral_valence`` CSV."""
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for lineno, row in enumerate(reader, start=2):
            try:
                relevant = _truthy(row["relevant"])
                out.append(RatingRecord(
                    annotator_id=row["annotator_id"].strip(),
                    word=row["word"].strip().lower(),
                    trait=Trait.parse(row["trait"]),
                    relevant=relevant,
                    valence=_opt(row["valence"]) if relevant else None,
                    arousal=_opt(row["arousal"]) if relevant else None,
                    moral_valence=_opt(row["moral_valence"]) if relevant else None,
                ))
            except (KeyError, ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return out


def load_golds(path) -> list[GoldWord]:
    """Read ``word,gold_mean,gold_sd`` CSV."""
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            try:
                out.append(GoldWord(row["word"].strip().lower(), float(row["gold_mean"]), float(row["gold_sd"])))
            except (KeyError, ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return out


def load_normative(path) -> dict[str, float]:
    """Read normative valence means.

    Accepts ``word,valence_mean`` columns, the gold CSV layout
    (``word,gold_mean,...``), or the Warriner et al. layout (``Word,V.Mean.Sum``).
    """
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        word_col = next((f for f in fields if f.lower() == "word"), None)
        val_col = next((f for f in ("valence_mean", "gold_mean", "V.Mean.Sum") if f in fields), None)
        if word_col is None or val_col is None:
            raise ValueError(f"{path}: cannot find word / valence columns in {fields}")
        return {row[word_col].strip().lower(): float(row[val_col]) for row in reader}
