"""Word embeddings and SIMON similarity features.

SIMON describes a document by how close its words come, in embedding space,
to a fixed selection of anchor words taken from the moral lexicon. Each
output component belongs to one anchor and holds the best cosine similarity
reached by any embedded document token (max pooling), or the mean over
tokens when ``pooling="mean"``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .lexicon import MORAL_TRAITS, NEUTRAL, Lexicon, LexiconError, Trait


class EmbeddingFormatError(ValueError):
    pass


class EmbeddingStore:
    """Immutable word -> vector map backed by one float matrix."""

    def __init__(self, words: Sequence[str], vectors):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[1] == 0:
            raise ValueError("vectors must form a 2-D array with dim > 0")
        if len(words) != vectors.shape[0]:
            raise ValueError("one vector per word required")
        self.words = list(words)
        self.vectors = vectors
        self.vectors.setflags(write=False)
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise ValueError("duplicate words in embedding store")
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        self._unit = np.divide(vectors, norms, out=np.zeros_like(vectors), where=norms > 0)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word) -> bool:
        return word in self.index

    def __getitem__(self, word: str) -> np.ndarray:
        return self.vectors[self.index[word]]

    def unit(self, words: Iterable[str]) -> np.ndarray:
        """Unit-normalized rows for ``words`` (zero rows stay zero)."""
        ids = [self.index[w] for w in words]
        return self._unit[ids]


def load_embeddings(path) -> EmbeddingStore:
    """Read word2vec text format: a ``count dim`` header, then ``word v1 ... vdim``."""
    vectors: dict[str, list[float]] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        try:
            count, dim = int(header[0]), int(header[1])
        except (IndexError, ValueError):
            raise EmbeddingFormatError(f"{path}:1: expected 'count dim' header") from None
        if dim <= 0:
            raise EmbeddingFormatError(f"{path}:1: dimension must be positive")
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").rstrip().split(" ")
            if not parts or parts == [""]:
                continue
            word, values = parts[0], parts[1:]
            if len(values) != dim:
                raise EmbeddingFormatError(f"{path}:{lineno}: expected {dim} values, got {len(values)}")
            try:
                vec = [float(v) for v in values]
            except ValueError:
                raise EmbeddingFormatError(f"{path}:{lineno}: non-numeric value") from None
            if word in vectors:
                warnings.warn(f"{path}:{lineno}: duplicate word {word!r}, keeping the last vector", stacklevel=2)
                del vectors[word]
            vectors[word] = vec
    if len(vectors) != count:
        warnings.warn(f"{path}: header announces {count} words, found {len(vectors)}", stacklevel=2)
    if not vectors:
        return EmbeddingStore([], np.zeros((0, dim)))
    return EmbeddingStore(list(vectors), np.array(list(vectors.values())))


def save_embeddings(store: EmbeddingStore, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(store)} {store.dim}\n")
        for word, vec in zip(store.words, store.vectors):
            # repr round-trips float64 exactly
            fh.write(word + " " + " ".join(repr(float(x)) for x in vec) + "\n")


def cosine_similarity(u, v) -> float:
    """Cosine of the angle between ``u`` and ``v``; 0.0 if either is the zero vector."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError("vectors differ in dimension")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


@dataclass(frozen=True)
class WordSelection:
    words: tuple[str, ...]
    traits: tuple[Optional[Trait], ...]

    def __len__(self) -> int:
        return len(self.words)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.writelines(w + "\n" for w in self.words)

    @classmethod
    def load(cls, path) -> "WordSelection":
        with open(path, encoding="utf-8") as fh:
            words = tuple(line.strip() for line in fh if line.strip())
        return cls(words, (None,) * len(words))


def select_words(
    lex: Lexicon, store: EmbeddingStore, per_trait_limit: Optional[int] = None
) -> WordSelection:
    """Choose anchor words: lexicon lemmas that have an embedding.

    Anchors are grouped by trait in canonical trait order. Within a trait
    they are ordered by distance of the score from neutral, most extreme
    first, ties alphabetical; ``per_trait_limit`` keeps the head of each
    group. A lemma listed under several traits is kept only once.
    """
    if per_trait_limit is not None and per_trait_limit < 1:
        raise ValueError("per_trait_limit must be positive")
    words: list[str] = []
    traits: list[Trait] = []
    seen = set()
    for trait in MORAL_TRAITS:
        extremity: dict[str, float] = {}
        for e in lex.entries_for(trait):
            if e.is_multiword or e.lemma not in store:
                continue
            extremity[e.lemma] = max(extremity.get(e.lemma, 0.0), abs(e.score - NEUTRAL))
        ranked = sorted(extremity, key=lambda w: (-extremity[w], w))
        ranked = [w for w in ranked if w not in seen]
        if per_trait_limit is not None:
            ranked = ranked[:per_trait_limit]
        for w in ranked:
            seen.add(w)
            words.append(w)
            traits.append(trait)
    if not words:
        raise LexiconError(f"no word of lexicon {lex.name!r} has an embedding")
    return WordSelection(tuple(words), tuple(traits))


def simon_vector(
    tokens: Sequence[str], selection: WordSelection, store: EmbeddingStore, pooling: str = "max"
) -> np.ndarray:
    """Similarity of a document to each anchor word; zeros if no token is embedded."""
    return simon_matrix([tokens], selection, store, pooling=pooling)[0]


def simon_matrix(
    corpus: Sequence[Sequence[str]], selection: WordSelection, store: EmbeddingStore, pooling: str = "max"
) -> np.ndarray:
    if not len(selection):
        raise ValueError("empty word selection")
    if pooling not in ("max", "mean"):
        raise ValueError(f"unknown pooling {pooling!r}")
    anchors = store.unit(selection.words)
    anchor_ids = np.array([store.index[w] for w in selection.words])
    nonzero = np.any(anchors != 0, axis=1)
    out = np.zeros((len(corpus), len(selection)))
    for i, tokens in enumerate(corpus):
        ids = [store.index[t] for t in tokens if t in store.index]
        if not ids:
            continue
        # pool over distinct tokens so order and repetition cannot change max pooling
        uniq, counts = np.unique(ids, return_counts=True)
        sims = np.clip(store._unit[uniq] @ anchors.T, -1.0, 1.0)
        # self-similarity is exactly 1, not 1 - ulp
        sims[(uniq[:, None] == anchor_ids[None, :]) & nonzero] = 1.0
        if pooling == "max":
            out[i] = sims.max(axis=0)
        else:
            out[i] = counts @ sims / counts.sum()
    return out
