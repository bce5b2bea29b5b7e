"""A walk through the lexicon and the rating-quality tools.

Run from the repository root:  python demos/01_lexicon_tour.py
"""

import warnings
from pathlib import Path

import numpy as np

from moralex.annotation import GoldWord, RatingMatrix, RatingRecord, agreement_report, discard_annotators, gwet_ac2
from moralex.lexicon import StemPattern, Trait, compare_counts, expand_stems, load_lexicon, load_release

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"

# The released per-trait annotation files carry one averaged score per lemma.
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    release = load_release(DATA / "release")
print(f"{len(release.entries)} lemmas in the release")
for token in ("kill", "honest", "obey", "saint"):
    print(f"  {token:8s} -> {release.lookup(token)}")

# Per-trait counts next to the published reference.
print(compare_counts(release).to_text())

# MFD stems like "traitor*" become candidate lemmas for annotation.
mfd = load_lexicon(DATA / "sample_mfd.tsv", "mfd")
inventory = [("traitor", "n"), ("traitorous", "a"), ("trait", "n"), ("safety", "n")]
patterns = {StemPattern(e.lemma, e.wildcard) for e in mfd}
for pattern, (lemma, pos) in expand_stems(patterns, inventory):
    print(f"  {pattern} covers {lemma}#{pos}")

# Three annotators rate six words; the third answers at random.
rng = np.random.default_rng(0)
truth = np.array([8, 2, 9, 1, 7, 3])
records = []
for ann in ("ann1", "ann2", "noisy"):
    records.append(RatingRecord(ann, "gold", Trait.CARE, True, 6.0, 5.0, 5.0))
    for i, t in enumerate(truth):
        mv = float(rng.integers(1, 10)) if ann == "noisy" else float(np.clip(t + rng.integers(-1, 2), 1, 9))
        records.append(RatingRecord(ann, f"word{i}", Trait.CARE, True, mv, 5.0, mv))

matrix = RatingMatrix.from_records([r for r in records if r.word != "gold"])
print(f"AC2 with all annotators:   {gwet_ac2(matrix):.3f}")
print(f"AC2 without the noisy one: {gwet_ac2(discard_annotators(matrix, ['noisy'])):.3f}")

rows = agreement_report(records, [GoldWord("gold", 6.0, 1.0)], discard=["noisy"])
for row in rows:
    print(row)
