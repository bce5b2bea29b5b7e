import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from moralex.lexicon import Lexicon, LexiconEntry, LexiconError, Polarity, Trait
from moralex.simon import (
    EmbeddingFormatError,
    EmbeddingStore,
    WordSelection,
    cosine_similarity,
    load_embeddings,
    save_embeddings,
    select_words,
    simon_matrix,
    simon_vector,
)

from oracles import cosine_loop


@pytest.fixture
def store(data_dir):
    return load_embeddings(data_dir / "embeddings.txt")


def test_load(store):
    assert len(store) == 10 and store.dim == 4
    assert store["safe"][3] == -0.890592


def test_roundtrip_exact(store, tmp_path):
    p = tmp_path / "e.txt"
    save_embeddings(store, p)
    back = load_embeddings(p)
    assert back.words == store.words
    assert np.array_equal(back.vectors, store.vectors)


@pytest.mark.parametrize("text, line", [
    ("2 3\na 1 2 3\nb 1 2\n", ":3:"),
    ("1 2\na 1 x\n", ":2:"),
    ("two 3\n", ":1:"),
])
def test_load_errors_carry_line(tmp_path, text, line):
    p = tmp_path / "bad.txt"
    p.write_text(text)
    with pytest.raises(EmbeddingFormatError, match=line):
        load_embeddings(p)


def test_duplicate_keeps_last(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("2 2\na 1 0\na 0 1\n")
    with pytest.warns(UserWarning):
        s = load_embeddings(p)
    assert s["a"].tolist() == [0.0, 1.0]


def test_cosine_examples():
    assert cosine_similarity([1, 0], [1, 0]) == 1.0
    assert cosine_similarity([1, 0], [0, 1]) == 0.0
    assert cosine_similarity([1, 0], [-1, 0]) == -1.0
    assert cosine_similarity([1, 0], [1, 1]) == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert cosine_similarity([0, 0], [1, 1]) == 0.0


vecs = st.lists(st.floats(-10, 10), min_size=3, max_size=3)


@given(vecs, vecs, st.floats(0.01, 100))
def test_cosine_scale_invariant_and_bounded(u, v, a):
    c = cosine_similarity(u, v)
    assert -1.0 <= c <= 1.0
    if np.linalg.norm(u) > 1e-3 and np.linalg.norm(v) > 1e-3:
        assert cosine_similarity([a * x for x in u], v) == pytest.approx(c, abs=1e-9)
        assert c == pytest.approx(cosine_loop(u, v), abs=1e-9)


def test_select_words_order_and_limit(store, sample_mfd, sample_lexicon):
    sel = select_words(sample_mfd, store)
    # kill and safe are equally extreme (pole scores), so alphabetical
    assert sel.words[:2] == ("kill", "safe")
    assert sel.traits[:2] == (Trait.CARE, Trait.CARE)
    assert "traitor" in sel.words
    sel = select_words(sample_lexicon, store)
    assert sel.words == ("safe", "fair", "traitor", "obey", "filth")
    assert select_words(sample_mfd, store, per_trait_limit=1).words[0] == "kill"


def test_select_words_dedupes_across_traits():
    lex = Lexicon([
        LexiconEntry("w", "n", Trait.CARE, Polarity.VIRTUE, 8.0),
        LexiconEntry("w", "n", Trait.PURITY, Polarity.VIRTUE, 9.0),
    ])
    s = EmbeddingStore(["w"], [[1.0, 0.0]])
    assert select_words(lex, s).words == ("w",)


def test_select_words_disjoint(store):
    lex = Lexicon([LexiconEntry("zzz", "n", Trait.CARE, Polarity.VIRTUE, 8.0)])
    with pytest.raises(LexiconError):
        select_words(lex, store)


def test_selection_file_roundtrip(tmp_path, store, sample_lexicon):
    sel = select_words(sample_lexicon, store)
    sel.save(tmp_path / "s.txt")
    assert WordSelection.load(tmp_path / "s.txt").words == sel.words


def simon_oracle(tokens, anchors, table):
    out = []
    for a in anchors:
        best = None
        for t in tokens:
            if t not in table:
                continue
            s = 1.0 if t == a else cosine_loop(table[t], table[a])
            best = s if best is None else max(best, s)
        out.append(0.0 if best is None else best)
    return out


def test_simon_examples(store):
    sel = WordSelection(("kill", "safe"), (Trait.CARE, Trait.CARE))
    v = simon_vector(["kill", "oov"], sel, store)
    assert v[0] == 1.0
    assert v[1] == pytest.approx(cosine_loop(store["kill"], store["safe"]), abs=1e-12)
    assert simon_vector(["oov"], sel, store).tolist() == [0.0, 0.0]
    assert simon_vector([], sel, store).tolist() == [0.0, 0.0]


def random_fixture(rng):
    vocab = [f"w{i}" for i in range(int(rng.integers(3, 15)))]
    dim = int(rng.integers(2, 8))
    vecs = rng.normal(size=(len(vocab), dim))
    store = EmbeddingStore(vocab, vecs)
    anchors = list(rng.choice(vocab, size=int(rng.integers(1, len(vocab) + 1)), replace=False))
    docs = [list(rng.choice(vocab + ["oov1", "oov2"], size=int(rng.integers(0, 12)))) for _ in range(4)]
    return store, anchors, docs


def test_simon_matches_loop_oracle():
    rng = np.random.default_rng(3)
    for _ in range(30):
        store, anchors, docs = random_fixture(rng)
        sel = WordSelection(tuple(anchors), (None,) * len(anchors))
        table = {w: store[w] for w in store.words}
        got = simon_matrix(docs, sel, store)
        for row, doc in zip(got, docs):
            assert np.max(np.abs(row - simon_oracle(doc, anchors, table))) <= 1e-12


def test_simon_order_and_duplicates_do_not_matter():
    rng = np.random.default_rng(4)
    for _ in range(20):
        store, anchors, docs = random_fixture(rng)
        sel = WordSelection(tuple(anchors), (None,) * len(anchors))
        doc = docs[0]
        base = simon_vector(doc, sel, store)
        shuffled = list(rng.permutation(doc)) if doc else []
        assert np.array_equal(simon_vector(shuffled, sel, store), base)
        assert np.array_equal(simon_vector(doc + doc, sel, store), base)


def test_simon_mean_pooling(store):
    sel = WordSelection(("kill",), (Trait.CARE,))
    v = simon_vector(["kill", "safe"], sel, store, pooling="mean")
    expected = (1.0 + cosine_loop(store["safe"], store["kill"])) / 2
    assert v[0] == pytest.approx(expected, abs=1e-12)
    with pytest.raises(ValueError):
        simon_vector(["kill"], sel, store, pooling="median")
