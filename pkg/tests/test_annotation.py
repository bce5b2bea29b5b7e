import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from moralex.annotation import (
    AggregatedRating,
    GoldWord,
    RatingMatrix,
    RatingRecord,
    UndefinedMetricError,
    aggregate_ratings,
    agreement_report,
    binarize_ratings,
    cohens_kappa,
    discard_annotators,
    gwet_ac2,
    pearson_corr,
    validate_annotator,
)
from moralex.lexicon import Polarity, Trait

from oracles import gwet_ac2_pairwise, kappa_exact, pearson_direct

GOLDS = [GoldWord(w, 6.0, 1.0) for w in ("g1", "g2", "g3", "g4")]


def gold_answers(vals, ann="a"):
    return [RatingRecord(ann, f"g{i + 1}", Trait.CARE, True, v, 5.0, 5.0) for i, v in enumerate(vals)]


def test_annotator_within_bound_accepted():
    v = validate_annotator(gold_answers([7.4] * 4), GOLDS)
    assert v.accepted and v.failed_count == 0


def test_annotator_two_failures_rejected():
    v = validate_annotator(gold_answers([7.6, 7.6, 6.0, 6.0]), GOLDS)
    assert not v.accepted and v.failed_count == 2


def test_single_failure_tolerated():
    assert validate_annotator(gold_answers([7.6, 6.0, 6.0, 6.0]), GOLDS).accepted


def test_exact_answers_accepted():
    assert validate_annotator(gold_answers([6.0] * 4), GOLDS).accepted


def test_bound_is_inclusive():
    assert validate_annotator(gold_answers([7.5, 4.5, 7.5, 4.5]), GOLDS).failed_count == 0


def test_missing_gold_ignored():
    v = validate_annotator(gold_answers([9.0, 6.0]), GOLDS)
    assert v.checked == 2 and v.failed_count == 1


def rec(ann, word, mv, trait=Trait.CARE, val=5.0):
    return RatingRecord(ann, word, trait, True, val, 5.0, mv)


def test_aggregate_mean_and_population_sd():
    (agg,) = aggregate_ratings([rec("a", "kill", 4), rec("b", "kill", 6)])
    assert agg.mean_moral_valence == 5.0 and agg.sd_moral_valence == 1.0 and agg.n_raters == 2


def test_aggregate_single_rating():
    (agg,) = aggregate_ratings([rec("a", "safe", 7)])
    assert (agg.mean_moral_valence, agg.sd_moral_valence) == (7.0, 0.0)


def test_aggregate_empty():
    assert aggregate_ratings([]) == []


def test_aggregate_respects_accepted_and_flags():
    recs = [rec("a", "kill", 2), rec("b", "kill", 8), rec("a", "safe", 8)]
    out = aggregate_ratings(recs, accepted={"a"}, min_raters=2)
    assert [(a.word, a.mean_moral_valence, a.flagged) for a in out] == [("kill", 2.0, True), ("safe", 8.0, True)]


def test_irrelevant_records_carry_no_scores():
    with pytest.raises(ValueError):
        RatingRecord("a", "w", Trait.CARE, False, 5.0, None, None)
    RatingRecord("a", "w", Trait.CARE, False)


# -- Gwet AC2 ---------------------------------------------------------------

def test_ac2_perfect_agreement():
    m = np.array([[3, 3, 3], [7, 7, 7], [1, 1, 1], [9, 9, 9]], dtype=float)
    assert gwet_ac2(m) == 1.0


FIXTURE_4x3 = np.array([
    [2, 3, np.nan],
    [7, 8, 8],
    [5, 4, 6],
    [9, np.nan, 7],
])


def test_ac2_matches_oracle_on_fixture():
    assert gwet_ac2(FIXTURE_4x3) == pytest.approx(gwet_ac2_pairwise(FIXTURE_4x3.tolist()), abs=1e-9)
    # frozen from the oracle
    assert gwet_ac2(FIXTURE_4x3) == pytest.approx(0.8715083798882683, abs=1e-9)


def test_ac2_dispersed_ratings_are_low():
    m = np.array([[1, 9, 5], [9, 1, 5], [1, 5, 9], [5, 9, 1], [9, 5, 1], [1, 9, 5]], dtype=float)
    oracle = gwet_ac2_pairwise(m.tolist())
    assert oracle < 0.2
    assert gwet_ac2(m) == pytest.approx(oracle, abs=1e-9)


def test_ac2_undefined_without_pairs():
    with pytest.raises(UndefinedMetricError):
        gwet_ac2(np.array([[1, np.nan], [np.nan, 4]]))


def random_matrix(rng, max_size=6):
    n_words = int(rng.integers(2, max_size + 1))
    n_ann = int(rng.integers(2, max_size + 1))
    m = rng.integers(1, 10, size=(n_words, n_ann)).astype(float)
    m[rng.random(m.shape) < 0.25] = np.nan
    m[0, :2] = rng.integers(1, 10, size=2)  # at least one pair
    return m


def test_ac2_column_permutation_invariance():
    rng = np.random.default_rng(1)
    for _ in range(50):
        m = random_matrix(rng)
        perm = rng.permutation(m.shape[1])
        assert gwet_ac2(m[:, perm]) == pytest.approx(gwet_ac2(m), abs=1e-12)


def test_ac2_is_one_only_under_exact_agreement():
    rng = np.random.default_rng(2)
    for _ in range(50):
        m = random_matrix(rng)
        rows = [r[~np.isnan(r)] for r in m]
        exact = all(len(set(r)) <= 1 for r in rows)
        assert (abs(gwet_ac2(m) - 1.0) < 1e-12) == exact


def test_discard_noisy_annotator_improves_ac2():
    rng = np.random.default_rng(5)
    truth = rng.integers(1, 10, size=12).astype(float)
    good1 = np.clip(truth + rng.integers(-1, 2, size=12), 1, 9)
    good2 = np.clip(truth + rng.integers(-1, 2, size=12), 1, 9)
    noisy = 10 - truth
    mat = RatingMatrix([f"w{i}" for i in range(12)], ["a", "b", "noisy"], np.column_stack([good1, good2, noisy]))
    trimmed = discard_annotators(mat, ["noisy"])
    assert trimmed.values.shape == (12, 2)
    assert gwet_ac2(trimmed) > gwet_ac2(mat)


def test_discard_all_but_one_makes_ac2_undefined():
    mat = RatingMatrix(["x", "y"], ["a", "b", "c"], [[1, 2, 3], [4, 5, 6]])
    with pytest.raises(UndefinedMetricError):
        gwet_ac2(discard_annotators(mat, ["a", "b"]))


def test_discard_unknown_id():
    mat = RatingMatrix(["x", "y"], ["a", "b"], [[1, 2], [4, 5]])
    with pytest.raises(KeyError):
        discard_annotators(mat, ["zz"])


# -- kappa / pearson --------------------------------------------------------

def test_kappa_examples():
    assert cohens_kappa(list("VVXX"), list("VVXX")) == 1.0
    assert cohens_kappa(list("VVXX"), list("VXVX")) == 0.0
    assert cohens_kappa(list("VVVX"), list("VVXX")) == pytest.approx(0.5, abs=1e-15)


def test_kappa_constant_raters_convention():
    assert cohens_kappa(["V"] * 3, ["V"] * 3) == 1.0


@settings(max_examples=200)
@given(st.lists(st.tuples(st.sampled_from("VX"), st.sampled_from("VX")), min_size=1, max_size=8))
def test_kappa_matches_exhaustive_count(pairs):
    a = [p[0] for p in pairs]
    b = [p[1] for p in pairs]
    assert cohens_kappa(a, b) == pytest.approx(kappa_exact(a, b), abs=1e-12)


def test_kappa_column_swap_symmetric():
    a, b = list("VVXVX"), list("VXXVV")
    assert cohens_kappa(a, b) == pytest.approx(cohens_kappa(b, a), abs=1e-15)


def test_pearson_examples():
    x = [1.0, 2.0, 3.0, 4.0]
    assert pearson_corr(x, x) == 1.0
    assert pearson_corr(x, [-v for v in x]) == -1.0
    y = [2.0, 4.0, 5.0, 9.0]
    assert pearson_corr(x, y) == pytest.approx(pearson_direct(x, y), abs=1e-12)
    assert pearson_corr(x, y) == pytest.approx(11 / np.sqrt(130), abs=1e-12)


def test_pearson_zero_variance():
    with pytest.raises(UndefinedMetricError):
        pearson_corr([1, 1, 1], [1, 2, 3])


@given(st.lists(st.floats(-100, 100), min_size=3, max_size=10),
       st.floats(0.1, 10), st.floats(-10, 10))
def test_pearson_affine_invariance(xs, a, b):
    x = np.array(xs)
    y = np.sin(x) + 0.1 * x
    if np.ptp(x) < 1e-3 or np.ptp(y) < 1e-3:
        return
    assert pearson_corr(a * x + b, y) == pytest.approx(pearson_corr(x, y), abs=1e-9)


# -- binarization and the full report --------------------------------------

def agg(word, mean):
    return AggregatedRating(word, Trait.CARE, 3, mean, 0.5, None)


def test_binarize():
    out = binarize_ratings([agg("a", 7.2), agg("b", 5.0), agg("c", 1.0)])
    assert out == [("a", Polarity.VIRTUE), ("c", Polarity.VICE)]


@given(st.lists(st.floats(5.01, 9.0), min_size=1, max_size=10))
def test_binarize_above_midpoint_is_virtue(vals):
    recs = [rec(f"a{i}", "w", v) for i, v in enumerate(vals)]
    assert {p for _, p in binarize_ratings(aggregate_ratings(recs))} == {Polarity.VIRTUE}


def test_agreement_report_perfect_and_anticorrelated(sample_mfd):
    words = {"safe": 8, "kill": 2, "safety": 9, "harm": 1}
    recs = []
    for ann in ("a", "b", "c"):
        recs += gold_answers([6.0] * 4, ann)
        for w, mv in words.items():
            recs.append(RatingRecord(ann, w, Trait.CARE, True, 10 - mv, 5.0, mv))
    normative = {w: float(mv) for w, mv in words.items()}
    (row,) = agreement_report(recs, GOLDS, mfd=sample_mfd, normative=normative)
    assert row.inter_annotator == 1.0
    assert row.warr_correlation == pytest.approx(-1.0)
    # safe, safety (virtue) and kill (vice) are in the MFD and agree
    assert row.mfd_agreement == 1.0
