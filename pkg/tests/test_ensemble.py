import itertools
import random

import pytest
from hypothesis import given, strategies as st

from rubriceval import CANNOT_ASSESS, MET, UNMET, Verdict, aggregate_binary_votes, aggregate_choice_votes, mean_agreement
from rubriceval.ensemble import AggregationStrategy

from conftest import chatbot_rubric

BINARY = ["majority", "weighted", "unanimous", "any"]


def truth_table(strategy, votes, weights):
    """Independent restatement of each rule over explicit vote lists."""
    kept = [(v, w) for v, w in zip(votes, weights) if v != "CA"]
    if not kept:
        return CANNOT_ASSESS
    n_met = sum(1 for v, _ in kept if v == "MET")
    n_unmet = len(kept) - n_met
    if strategy == "majority":
        return MET if n_met > n_unmet else UNMET
    if strategy == "weighted":
        met_w = sum(w for v, w in kept if v == "MET")
        unmet_w = sum(w for v, w in kept if v == "UNMET")
        return MET if met_w > unmet_w else UNMET
    if strategy == "unanimous":
        return MET if n_unmet == 0 else UNMET
    return MET if n_met >= 1 else UNMET


TO_VERDICT = {"MET": MET, "UNMET": UNMET, "CA": CANNOT_ASSESS}


@pytest.mark.parametrize("strategy", BINARY)
@pytest.mark.parametrize("k", [1, 2, 3])
def test_brute_force_equivalence(strategy, k):
    for weights in ([1.0] * k, [1.0, 1.2, 0.7][:k], [2.0, 1.0, 1.0][:k]):
        for pattern in itertools.product(["MET", "UNMET", "CA"], repeat=k):
            votes = [(TO_VERDICT[v], w) for v, w in zip(pattern, weights)]
            assert aggregate_binary_votes(votes, strategy) == truth_table(strategy, pattern, weights), (pattern, weights)


def test_examples():
    assert aggregate_binary_votes([(MET, 1), (MET, 1), (UNMET, 1)], "majority") == MET
    assert aggregate_binary_votes([(MET, 1.0), (UNMET, 1.2)], "weighted") == UNMET
    assert aggregate_binary_votes([(MET, 1), (MET, 1), (UNMET, 1)], "unanimous") == UNMET


def test_ties_break_to_unmet():
    assert aggregate_binary_votes([(MET, 1), (UNMET, 1)], "majority") == UNMET
    assert aggregate_binary_votes([(MET, 1.5), (UNMET, 1.5)], "weighted") == UNMET


def test_binary_errors():
    with pytest.raises(ValueError):
        aggregate_binary_votes([], "majority")
    with pytest.raises(ValueError):
        aggregate_binary_votes([(MET, 1)], "mean")


def test_implication_chain_random_patterns():
    rng = random.Random(0)
    for _ in range(10_000):
        k = rng.randint(1, 7)
        votes = [(rng.choice([MET, UNMET, CANNOT_ASSESS]), rng.uniform(0.1, 3)) for _ in range(k)]
        u = aggregate_binary_votes(votes, "unanimous")
        m = aggregate_binary_votes(votes, "majority")
        a = aggregate_binary_votes(votes, "any")
        if u == MET:
            assert m == MET
        if m == MET:
            assert a == MET


@given(
    st.lists(st.tuples(st.sampled_from([MET, UNMET, CANNOT_ASSESS]), st.floats(0.1, 5)), min_size=1, max_size=6),
    st.sampled_from(BINARY),
    st.randoms(),
)
def test_order_invariance(votes, strategy, rnd):
    shuffled = list(votes)
    rnd.shuffle(shuffled)
    assert aggregate_binary_votes(votes, strategy) == aggregate_binary_votes(shuffled, strategy)


satisfaction = chatbot_rubric()[0]
specificity = chatbot_rubric()[5]


def test_choice_unanimous_vote():
    out = aggregate_choice_votes(satisfaction, [(Verdict.choice(2), 1)] * 3, "majority")
    assert out.verdict == Verdict.choice(2)


def test_choice_mean_tie_goes_low():
    out = aggregate_choice_votes(satisfaction, [(Verdict.choice(0), 1), (Verdict.choice(3), 1)], "mean")
    assert out.value == 0.5
    assert out.verdict == Verdict.choice(1)


def test_choice_mode():
    votes = [(Verdict.choice(1), 1), (Verdict.choice(1), 1), (Verdict.choice(3), 1)]
    assert aggregate_choice_votes(satisfaction, votes, "majority").verdict == Verdict.choice(1)


def test_choice_mode_tie_and_weights():
    votes = [(Verdict.choice(3), 1.0), (Verdict.choice(1), 1.2)]
    assert aggregate_choice_votes(satisfaction, votes, "majority").verdict == Verdict.choice(1)
    assert aggregate_choice_votes(satisfaction, votes, "weighted").verdict == Verdict.choice(1)
    votes = [(Verdict.choice(3), 2.0), (Verdict.choice(1), 1.2)]
    assert aggregate_choice_votes(satisfaction, votes, "weighted").verdict == Verdict.choice(3)


def test_choice_weighted_mean():
    out = aggregate_choice_votes(satisfaction, [(Verdict.choice(3), 3.0), (Verdict.choice(0), 1.0)], "mean")
    assert out.value == 0.75
    assert out.verdict == Verdict.choice(2)  # 0.75 sits nearer 0.67 than 1.0


def test_choice_cannot_assess_and_na():
    assert aggregate_choice_votes(satisfaction, [(CANNOT_ASSESS, 1)], "mean").verdict == CANNOT_ASSESS
    out = aggregate_choice_votes(specificity, [(Verdict.choice(4), 1), (CANNOT_ASSESS, 1)], "mean")
    assert out.verdict == Verdict.choice(4) and out.value is None
    out = aggregate_choice_votes(specificity, [(Verdict.choice(4), 1), (Verdict.choice(3), 1)], "mean")
    assert out.verdict == Verdict.choice(3) and out.value == 1.0


def test_choice_rejects_binary_only_strategies():
    with pytest.raises(ValueError):
        aggregate_choice_votes(satisfaction, [(Verdict.choice(0), 1)], AggregationStrategy.UNANIMOUS)


def test_mean_agreement():
    assert mean_agreement([[MET, MET, MET], [UNMET, UNMET, UNMET]]) == 1.0
    assert mean_agreement([[MET, MET, UNMET]]) == pytest.approx(1 / 3)
    assert mean_agreement([[MET], [UNMET]]) is None
    assert mean_agreement([[MET, UNMET], [MET, MET]]) == 0.5


length = chatbot_rubric()[3]  # nominal; "Too brief" and "Too verbose" share value 0


def test_nominal_mean_keeps_option_identity():
    out = aggregate_choice_votes(length, [(Verdict.choice(1), 1)], "mean")
    assert out.verdict == Verdict.choice(1) and out.value == 0.0
    votes = [(Verdict.choice(1), 1.0), (Verdict.choice(1), 1.0), (Verdict.choice(2), 1.0)]
    out = aggregate_choice_votes(length, votes, "mean")
    assert out.verdict == Verdict.choice(1)
    assert out.value == pytest.approx(1 / 3)
