"""Synthetic corpora with a planted moral signal.

Each moral document carries one or two strongly rated lemmas of its trait.
The rest of the text is filler, plus lemmas rated exactly neutral (5) that
appear everywhere. A binary MFD-style lexicon covers only part of the
strongly rated lemmas, and it also lists the neutral lemmas as virtues.
That setup is meant to reward valence-aware features over plain MFD counts.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from itertools import product

import numpy as np

from .lexicon import MORAL_TRAITS, Lexicon, LexiconEntry, Polarity, Trait
from .simon import EmbeddingStore
from .textproc import Document, make_document


def _words(prefix: str, n: int) -> list[str]:
    letters = ["".join(p) for p in product(string.ascii_lowercase, repeat=2)]
    return [prefix + letters[i] for i in range(n)]


@dataclass
class PlantedCorpus:
    documents: list[Document]
    lexicon: Lexicon
    mfd: Lexicon
    embeddings: EmbeddingStore


def planted_corpus(
    n_docs: int = 600,
    seed: int = 0,
    words_per_pole: int = 12,
    mfd_coverage: float = 0.3,
    filler_size: int = 100,
    doc_length: tuple[int, int] = (8, 16),
    dim: int = 16,
    non_moral_rate: float = 1 / 6,
    trait_rate: float = 0.4,
) -> PlantedCorpus:
    rng = np.random.default_rng(seed)
    entries, mfd_entries = [], []
    strong: dict[Trait, list[str]] = {}
    neutral: list[str] = []
    for trait in MORAL_TRAITS:
        virtues = _words(trait.value + "virt", words_per_pole)
        vices = _words(trait.value + "vice", words_per_pole)
        neutrals = _words(trait.value + "neut", words_per_pole // 2)
        strong[trait] = virtues + vices
        neutral += neutrals
        for w in virtues:
            entries.append(LexiconEntry(w, "n", trait, Polarity.VIRTUE, round(rng.uniform(7.5, 9.0), 2)))
        for w in vices:
            entries.append(LexiconEntry(w, "n", trait, Polarity.VICE, round(rng.uniform(1.0, 2.5), 2)))
        for w in neutrals:
            entries.append(LexiconEntry(w, "n", trait, Polarity.VIRTUE, 5.0))
            mfd_entries.append(LexiconEntry(w, "unknown", trait, Polarity.VIRTUE))
        n_cov = max(1, int(round(mfd_coverage * words_per_pole)))
        for w in virtues[:n_cov]:
            mfd_entries.append(LexiconEntry(w, "unknown", trait, Polarity.VIRTUE))
        for w in vices[:n_cov]:
            mfd_entries.append(LexiconEntry(w, "unknown", trait, Polarity.VICE))
    filler = _words("fill", filler_size) if filler_size <= 676 else [f"fill{i}" for i in range(filler_size)]

    # filler frequencies follow Zipf's law, as function words do in real text
    zipf = 1.0 / np.arange(1, len(filler) + 1)
    zipf /= zipf.sum()

    docs = []
    for i in range(n_docs):
        if rng.random() < non_moral_rate:
            labels = [Trait.NON_MORAL]
        else:
            labels = [t for t in MORAL_TRAITS if rng.random() < trait_rate]
            if not labels:
                labels = [MORAL_TRAITS[int(rng.integers(len(MORAL_TRAITS)))]]
        length = int(rng.integers(doc_length[0], doc_length[1] + 1))
        tokens = list(rng.choice(filler, size=length, p=zipf))
        tokens += list(rng.choice(neutral, size=int(rng.integers(0, 3))))
        for label in labels:
            if label is not Trait.NON_MORAL:
                tokens += list(rng.choice(strong[label], size=int(rng.integers(1, 3))))
        rng.shuffle(tokens)
        docs.append(make_document(f"d{i:04d}", " ".join(tokens), labels))

    # trait words cluster around a trait centre; filler is isotropic noise
    centres = {t: rng.normal(size=dim) * 3 for t in MORAL_TRAITS}
    words, vecs = [], []
    for trait in MORAL_TRAITS:
        for w in strong[trait]:
            words.append(w)
            vecs.append(centres[trait] + rng.normal(size=dim))
    for w in neutral + filler:
        words.append(w)
        vecs.append(rng.normal(size=dim))
    store = EmbeddingStore(words, np.array(vecs))
    return PlantedCorpus(docs, Lexicon(entries, "planted"), Lexicon(mfd_entries, "planted-mfd"), store)
