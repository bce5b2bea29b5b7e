"""Cross-validated comparison of feature sets on a synthetic corpus.

The corpus is built so that documents of a trait contain strongly rated
lemmas of that trait, while a binary MFD-style list knows only some of them.
Run:  python demos/02_planted_experiment.py
"""

from moralex.features import FeaturePipeline, MoralFreqExtractor, MoralStatsExtractor, SimonExtractor, UnigramExtractor
from moralex.learn import evaluate
from moralex.lexicon import MORAL_TRAITS
from moralex.ranking import render_comparison_table
from moralex.synthetic import planted_corpus
from moralex.textproc import label_counts

corpus = planted_corpus(n_docs=600, seed=0)
docs = corpus.documents
print("documents per label:", {t.value: n for t, n in label_counts(docs).items()})
print("example:", docs[0].labels, " ".join(docs[0].tokens))

lex, mfd, emb = corpus.lexicon, corpus.mfd, corpus.embeddings
methods = {
    "mfd_freq": lambda: FeaturePipeline([MoralFreqExtractor(mfd, mode="polarity", name="mfd_freq")]),
    "unigrams": lambda: FeaturePipeline([UnigramExtractor()]),
    "moral_freq": lambda: FeaturePipeline([MoralFreqExtractor(lex)]),
    "moral_stats": lambda: FeaturePipeline([MoralStatsExtractor(lex)]),
    "unigrams+moral_freq": lambda: FeaturePipeline([UnigramExtractor(), MoralFreqExtractor(lex)]),
    "simon": lambda: FeaturePipeline([SimonExtractor(lex, emb)]),
}

reports = []
for name, make in methods.items():
    r = evaluate(docs, make, traits=MORAL_TRAITS, k=10, sampling="under", seed=0, method=name)
    print(f"{name:22s} mean F1 {r.average:.3f}")
    reports.append(r)

# Rows marked * beat the MFD baseline by Bonferroni-Dunn at alpha 0.05.
print()
print(render_comparison_table(reports, baseline="mfd_freq").to_text())
