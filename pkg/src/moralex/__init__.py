"""Moral-foundations lexicon tools: lexicon expansion, rating quality,
lexicon features (frequency, statistics, SIMON), evaluation and ranking."""

__version__ = "0.1.0"

from .lexicon import (
    ALL_LABELS,
    MORAL_TRAITS,
    Lexicon,
    LexiconEntry,
    Polarity,
    StemPattern,
    Trait,
    expand_stems,
    load_lexicon,
    save_lexicon,
)
from .textproc import Document, build_vocab, load_dataset, normalize_tweet, tokenize, unigram_features
from .features import FeaturePipeline, FeatureVector, concat_features, moral_freq, moral_stats
from .simon import EmbeddingStore, cosine_similarity, load_embeddings, select_words, simon_vector
from .learn import cross_validate, evaluate, f1_score, oversample, predict, train_logistic, undersample
from .ranking import ScoreMatrix, average_ranks, bonferroni_dunn, friedman_test, render_comparison_table
