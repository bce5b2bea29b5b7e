"""Lexicon-driven document features and feature composition.

``moral_freq`` gives 10 numbers per document: for each trait, the share of
tokens that lean to its virtue pole (score above 5) and to its vice pole
(below 5). ``moral_stats`` gives 20: mean, SD, median and max of the scores
of matched tokens, per trait.

The extractor classes wrap these (and unigrams / SIMON) behind a
``fit`` / ``transform`` interface so cross-validation can fit vocabularies
on training folds only.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .lexicon import MORAL_TRAITS, NEUTRAL, Lexicon
from .simon import EmbeddingStore, WordSelection, select_words, simon_matrix
from .textproc import Document, Vocabulary, build_vocab, unigram_matrix

FREQ_SCHEMA = tuple(f"{t.value}_{pole}" for t in MORAL_TRAITS for pole in ("virtue", "vice"))
STATS_SCHEMA = tuple(f"{t.value}_{s}" for t in MORAL_TRAITS for s in ("mean", "std", "median", "max"))


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    schema: tuple[str, ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(self, "schema", tuple(self.schema))
        if self.values.shape != (len(self.schema),):
            raise ValueError(f"{len(self.schema)} schema names for {self.values.size} values")
        if len(set(self.schema)) != len(self.schema):
            raise ValueError("schema names must be unique")

    def __len__(self) -> int:
        return len(self.schema)


def moral_freq(tokens: Sequence[str], lex: Lexicon, mode: str = "valence") -> FeatureVector:
    """Normalized virtue/vice counts per trait.

    The denominator is the full token count, out-of-lexicon tokens included.
    ``mode="polarity"`` uses the virtue/vice labels instead of the scores.
    """
    return FeatureVector(_freq_rows([tokens], lex, mode)[0], FREQ_SCHEMA, "freq")


def moral_stats(tokens: Sequence[str], lex: Lexicon, fill: float = NEUTRAL) -> FeatureVector:
    """Mean, population SD, median and max of matched scores, per trait.

    A token counts once per occurrence. Traits without matches get
    ``(fill, 0, fill, fill)``.
    """
    return FeatureVector(_stats_rows([tokens], lex, fill)[0], STATS_SCHEMA, "stats")


def _freq_rows(corpus, lex: Lexicon, mode: str = "valence") -> np.ndarray:
    if mode not in ("valence", "polarity"):
        raise ValueError(f"unknown moral_freq mode {mode!r}")
    out = np.zeros((len(corpus), 2 * len(MORAL_TRAITS)))
    col = {t: 2 * i for i, t in enumerate(MORAL_TRAITS)}
    for i, tokens in enumerate(corpus):
        if not tokens:
            continue
        for tok in tokens:
            for trait, score in lex.lookup(tok, by=mode).items():
                if score > NEUTRAL:
                    out[i, col[trait]] += 1
                elif score < NEUTRAL:
                    out[i, col[trait] + 1] += 1
        out[i] /= len(tokens)
    return out


def _stats_rows(corpus, lex: Lexicon, fill: float = NEUTRAL) -> np.ndarray:
    out = np.zeros((len(corpus), 4 * len(MORAL_TRAITS)))
    for i, tokens in enumerate(corpus):
        matched = {t: [] for t in MORAL_TRAITS}
        for tok in tokens:
            for trait, score in lex.lookup(tok).items():
                matched[trait].append(score)
        for j, trait in enumerate(MORAL_TRAITS):
            vals = matched[trait]
            if vals:
                a = np.asarray(vals)
                out[i, 4 * j: 4 * j + 4] = (a.mean(), a.std(), np.median(a), a.max())
            else:
                out[i, 4 * j: 4 * j + 4] = (fill, 0.0, fill, fill)
    return out


def concat_features(parts: Sequence[FeatureVector]) -> FeatureVector:
    """Join feature vectors; names become ``<part>:<component>``."""
    if not parts:
        raise ValueError("nothing to concatenate")
    schema = []
    for p in parts:
        schema.extend(f"{p.name}:{s}" if p.name else s for s in p.schema)
    if len(set(schema)) != len(schema):
        raise ValueError("feature name collision after prefixing")
    name = "+".join(p.name for p in parts if p.name)
    return FeatureVector(np.concatenate([p.values for p in parts]), tuple(schema), name if len(parts) > 1 else parts[0].name)


# -- batch extractors -------------------------------------------------------

def _tokens(docs) -> list[Sequence[str]]:
    return [d.tokens if isinstance(d, Document) else d for d in docs]


class Extractor:
    """Base class: ``fit`` on training documents, ``transform`` any documents."""

    name = "features"
    sparse = False

    def fit(self, docs) -> "Extractor":
        return self

    def transform(self, docs):
        raise NotImplementedError

    @property
    def schema(self) -> tuple[str, ...]:
        raise NotImplementedError


class UnigramExtractor(Extractor):
    name = "unigrams"
    sparse = True

    def __init__(self, min_count: int = 1):
        self.min_count = min_count
        self.vocab: Optional[Vocabulary] = None

    def fit(self, docs):
        self.vocab = build_vocab(_tokens(docs), self.min_count)
        return self

    def transform(self, docs):
        if self.vocab is None:
            raise RuntimeError("unigram extractor is not fitted")
        return unigram_matrix(_tokens(docs), self.vocab)

    @property
    def schema(self):
        return tuple(self.vocab.tokens())


class MoralFreqExtractor(Extractor):
    def __init__(self, lex: Lexicon, mode: str = "valence", name: str = "moral_freq"):
        self.lex = lex
        self.mode = mode
        self.name = name

    def transform(self, docs):
        return _freq_rows(_tokens(docs), self.lex, self.mode)

    @property
    def schema(self):
        return FREQ_SCHEMA


class MoralStatsExtractor(Extractor):
    def __init__(self, lex: Lexicon, fill: float = NEUTRAL, name: str = "moral_stats"):
        self.lex = lex
        self.fill = fill
        self.name = name

    def transform(self, docs):
        return _stats_rows(_tokens(docs), self.lex, self.fill)

    @property
    def schema(self):
        return STATS_SCHEMA


class SimonExtractor(Extractor):
    def __init__(self, lex: Lexicon, store: EmbeddingStore, per_trait_limit: Optional[int] = None,
                 pooling: str = "max", name: str = "simon"):
        self.store = store
        self.pooling = pooling
        self.name = name
        self.selection: WordSelection = select_words(lex, store, per_trait_limit)

    def transform(self, docs):
        return simon_matrix(_tokens(docs), self.selection, self.store, self.pooling)

    @property
    def schema(self):
        return self.selection.words


class FeaturePipeline:
    """Horizontal concatenation of extractors; sparse if any part is sparse."""

    def __init__(self, extractors: Sequence[Extractor]):
        if not extractors:
            raise ValueError("a pipeline needs at least one extractor")
        self.extractors = list(extractors)

    @property
    def name(self) -> str:
        return "+".join(e.name for e in self.extractors)

    def fit(self, docs) -> "FeaturePipeline":
        for e in self.extractors:
            e.fit(docs)
        return self

    def transform(self, docs):
        blocks = [e.transform(docs) for e in self.extractors]
        if any(sp.issparse(b) for b in blocks):
            return sp.hstack([sp.csr_matrix(b) for b in blocks], format="csr")
        return np.hstack(blocks)

    def fit_transform(self, docs):
        return self.fit(docs).transform(docs)

    @property
    def schema(self) -> tuple[str, ...]:
        names = []
        for e in self.extractors:
            names.extend(f"{e.name}:{s}" for s in e.schema)
        return tuple(names)


def write_feature_csv(path, ids: Sequence[str], matrix, schema: Sequence[str]) -> None:
    """One row per document, ``id`` first, schema names as header."""
    dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", *schema])
        for doc_id, row in zip(ids, dense):
            w.writerow([doc_id, *(repr(float(x)) for x in row)])
