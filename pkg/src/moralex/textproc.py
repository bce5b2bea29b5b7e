"""Tweet normalization, tokenization and bag-of-words features."""

from __future__ import annotations

import csv
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from itertools import groupby
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .lexicon import Trait

SPECIAL_TOKENS = ("<url>", "<username>", "<hashtag>", "<number>")

_URL_RE = re.compile(r"(?:https?://|www\.)\S+|\bt\.co/\S*", re.IGNORECASE)
_USER_RE = re.compile(r"@\w+")
_HASHTAG_RE = re.compile(r"#(\w+)")
_NUMBER_RE = re.compile(r"\d+")
# everything that survives: special tokens and letter runs
_KEEP_RE = re.compile(r"<(?:url|username|hashtag|number)>|[^\W\d_]+")


def normalize_tweet(raw: str) -> str:
    """Replace URLs, mentions, hashtags and numbers with special tokens.

    >>> normalize_tweet("#Baltimore rises, see https://t.co/x1 @bob!!")
    '<hashtag> baltimore rises see <url> <username>'
    """
    text = _URL_RE.sub(" <url> ", raw)
    text = _USER_RE.sub(" <username> ", text)
    text = _HASHTAG_RE.sub(r" <hashtag> \1 ", text)
    text = _NUMBER_RE.sub(" <number> ", text)
    out = []
    for tok in _KEEP_RE.findall(text.lower()):
        if tok.startswith("<"):
            out.append(tok)
        else:
            # \w also admits numeric symbols such as vulgar fractions
            out.extend("".join(g) for alpha, g in groupby(tok, str.isalpha) if alpha)
    return " ".join(out)


def tokenize(normalized: str) -> list[str]:
    return normalized.split()


@dataclass
class Document:
    id: str
    raw_text: str
    labels: frozenset = frozenset()
    normalized_text: str = ""
    tokens: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.labels = frozenset(self.labels)
        if Trait.NON_MORAL in self.labels and len(self.labels) > 1:
            raise ValueError(f"document {self.id}: non-moral must be the only label")
        if not self.normalized_text and self.raw_text:
            self.normalized_text = normalize_tweet(self.raw_text)
        if not self.tokens and self.normalized_text:
            self.tokens = tokenize(self.normalized_text)

    def has(self, trait: Trait) -> bool:
        return trait in self.labels


def make_document(id, text: str, labels: Iterable = ()) -> Document:
    labels = frozenset(l if isinstance(l, Trait) else Trait.parse(l) for l in labels)
    return Document(id=str(id), raw_text=text, labels=labels)


def _parse_labels(value) -> list[str]:
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value if str(v).strip()]
    return [v for v in re.split(r"[,;|]", value or "") if v.strip()]


def load_dataset(path) -> list[Document]:
    """Read a CSV or JSON-lines file with ``id``, ``text`` and ``labels`` fields."""
    path = Path(path)
    docs = []
    if path.suffix.lower() in (".jsonl", ".json", ".ndjson"):
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                    docs.append(make_document(row["id"], row["text"], _parse_labels(row.get("labels", []))))
                except (ValueError, KeyError) as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from None
    else:
        with open(path, encoding="utf-8", newline="") as fh:
            for lineno, row in enumerate(csv.DictReader(fh), start=2):
                try:
                    docs.append(make_document(row["id"], row["text"], _parse_labels(row.get("labels", ""))))
                except (ValueError, KeyError) as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from None
    return docs


def save_dataset(docs: Sequence[Document], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for d in docs:
            labels = sorted(l.value for l in d.labels)
            fh.write(json.dumps({"id": d.id, "text": d.raw_text, "labels": labels}) + "\n")


def label_counts(docs: Sequence[Document]) -> dict[Trait, int]:
    """Documents per label, the layout of a corpus statistics table."""
    c = Counter(l for d in docs for l in d.labels)
    return {t: c.get(t, 0) for t in Trait}


@dataclass(frozen=True)
class Vocabulary:
    index: dict

    @property
    def size(self) -> int:
        return len(self.index)

    def __len__(self) -> int:
        return len(self.index)

    def __contains__(self, token) -> bool:
        return token in self.index

    def tokens(self) -> list[str]:
        return sorted(self.index, key=self.index.__getitem__)


TokenSource = Union[Document, Sequence[str]]


def _tokens_of(doc: TokenSource) -> Sequence[str]:
    return doc.tokens if isinstance(doc, Document) else doc


def build_vocab(corpus: Iterable[TokenSource], min_count: int = 1) -> Vocabulary:
    """Index tokens by descending corpus frequency, ties broken alphabetically."""
    if min_count < 1:
        raise ValueError("min_count must be at least 1")
    counts = Counter()
    for doc in corpus:
        counts.update(_tokens_of(doc))
    kept = sorted((t for t, n in counts.items() if n >= min_count), key=lambda t: (-counts[t], t))
    return Vocabulary({t: i for i, t in enumerate(kept)})


def unigram_features(tokens: Sequence[str], vocab: Vocabulary) -> sp.csr_matrix:
    """Token counts as a 1 x |vocab| sparse row; out-of-vocabulary tokens are dropped."""
    return unigram_matrix([tokens], vocab)


def unigram_matrix(corpus: Sequence[TokenSource], vocab: Vocabulary) -> sp.csr_matrix:
    rows, cols = [], []
    for i, doc in enumerate(corpus):
        for t in _tokens_of(doc):
            j = vocab.index.get(t)
            if j is not None:
                rows.append(i)
                cols.append(j)
    data = np.ones(len(rows))
    m = sp.csr_matrix((data, (rows, cols)), shape=(len(corpus), vocab.size))
    m.sum_duplicates()
    return m
