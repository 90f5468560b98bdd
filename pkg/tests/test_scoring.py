import pytest
from hypothesis import given, strategies as st

from rubriceval import (
    CANNOT_ASSESS,
    FAIL,
    MET,
    PARTIAL,
    SKIP,
    UNMET,
    ZERO,
    Criterion,
    CriterionOption,
    Rubric,
    UndefinedScoreError,
    Verdict,
    aggregate_score,
    resolve_cannot_assess,
    verdict_value,
)
from rubriceval.rubric import InvalidVerdictError
from rubriceval.scoring import CannotAssessStrategy

from conftest import chatbot_rubric


def test_verdict_values():
    chatbot = chatbot_rubric()
    assert verdict_value(Criterion("b"), MET) == 1.0
    assert verdict_value(Criterion("b"), UNMET) == 0.0
    assert verdict_value(chatbot[0], Verdict.choice(2)) == 0.67
    assert verdict_value(chatbot[5], Verdict.choice(4)) is None  # N/A
    assert verdict_value(chatbot[0], CANNOT_ASSESS) is None
    with pytest.raises(InvalidVerdictError):
        verdict_value(chatbot[0], MET)


def test_industrial_hand_cases(industrial):
    assert aggregate_score(industrial, [MET] * 5) == 0.8125
    assert aggregate_score(industrial, [MET, MET, MET, MET, UNMET]) == 1.0
    assert aggregate_score(industrial, [UNMET, UNMET, UNMET, UNMET, MET]) == 0.0


two = Rubric([Criterion("a", 1), Criterion("b", 1)])


@pytest.mark.parametrize(
    "strategy,expected",
    [(SKIP, 1.0), (ZERO, 0.5), (PARTIAL(0.5), 0.75), (FAIL, 0.5)],
)
def test_cannot_assess_strategies(strategy, expected):
    assert aggregate_score(two, [MET, CANNOT_ASSESS], strategy) == expected


def test_resolution_on_penalty():
    penalty = Criterion("bad", -10)
    assert resolve_cannot_assess(penalty, SKIP) is None
    assert resolve_cannot_assess(penalty, ZERO) == 0.0
    assert resolve_cannot_assess(penalty, FAIL) == 1.0
    assert resolve_cannot_assess(penalty, PARTIAL(0.3)) == 0.3


def test_penalty_cannot_assess_hand_cases():
    r = Rubric([Criterion("good", 10), Criterion("bad", -4)])
    verdicts = [MET, CANNOT_ASSESS]
    assert aggregate_score(r, verdicts, SKIP) == 1.0
    assert aggregate_score(r, verdicts, ZERO) == 1.0
    assert aggregate_score(r, verdicts, FAIL) == 0.6
    assert aggregate_score(r, verdicts, PARTIAL(0.5)) == 0.8


def test_penalty_only_cases():
    # penalty criteria alongside one positive: penalties sink the score, clamped at 0
    r = Rubric([Criterion("good", 5), Criterion("bad1", -3), Criterion("bad2", -4)])
    assert aggregate_score(r, [MET, MET, UNMET]) == 0.4
    assert aggregate_score(r, [MET, MET, MET]) == 0.0
    assert aggregate_score(r, [UNMET, UNMET, UNMET]) == 0.0


def test_multi_choice_hand_case():
    chatbot = chatbot_rubric()
    verdicts = [Verdict.choice(2), Verdict.choice(3), Verdict.choice(1), Verdict.choice(2), MET, Verdict.choice(4)]
    # specificity N/A skipped: (10*.67 + 8*1 + 5*.33 + 4*1 + 10*1) / 37
    expected = (10 * 0.67 + 8 * 1.0 + 5 * 0.33 + 4 * 1.0 + 10 * 1.0) / 37.0
    assert aggregate_score(chatbot, verdicts) == expected


def test_all_skipped_is_undefined():
    with pytest.raises(UndefinedScoreError):
        aggregate_score(two, [CANNOT_ASSESS, CANNOT_ASSESS], SKIP)


def test_value_override():
    chatbot = chatbot_rubric()
    verdicts = [Verdict.choice(1)] + [CANNOT_ASSESS] * 5
    assert aggregate_score(chatbot, verdicts, SKIP, values=[0.5, None, None, None, None, None]) == 0.5


def test_strategy_parse():
    assert CannotAssessStrategy.parse("partial:0.25") == PARTIAL(0.25)
    assert CannotAssessStrategy.parse("FAIL") == FAIL
    with pytest.raises(ValueError):
        PARTIAL(1.5)


@st.composite
def scored(draw):
    n = draw(st.integers(1, 6))
    crits = [Criterion(f"c{i}", draw(st.sampled_from([-20, -5, -1, 1, 3, 10, 30]))) for i in range(n)]
    if not any(c.weight > 0 for c in crits):
        crits.append(Criterion("pos", 1))
    r = Rubric(crits)
    verdicts = [draw(st.sampled_from([MET, UNMET, CANNOT_ASSESS])) for _ in r.criteria]
    strategy = draw(st.sampled_from([ZERO, FAIL, PARTIAL(0.5)]))
    return r, verdicts, strategy


@given(scored())
def test_score_in_unit_interval(case):
    r, verdicts, strategy = case
    assert 0.0 <= aggregate_score(r, verdicts, strategy) <= 1.0


@given(scored(), st.data())
def test_monotonicity(case, data):
    r, verdicts, strategy = case
    i = data.draw(st.integers(0, len(r) - 1))
    lo = list(verdicts)
    hi = list(verdicts)
    lo[i], hi[i] = UNMET, MET
    a, b = aggregate_score(r, lo, strategy), aggregate_score(r, hi, strategy)
    if r[i].weight > 0:
        assert b >= a
    else:
        assert b <= a


@given(st.lists(st.tuples(st.integers(1, 40), st.booleans()), min_size=1, max_size=8))
def test_coverage_identity(rows):
    r = Rubric([Criterion(f"c{i}", w) for i, (w, _) in enumerate(rows)])
    verdicts = [MET if met else UNMET for _, met in rows]
    coverage = sum(w * met for w, met in rows) / sum(w for w, _ in rows)
    assert aggregate_score(r, verdicts) == pytest.approx(coverage, rel=1e-12)


def test_options_need_not_be_evenly_spaced():
    c = Criterion("q", 1, "ordinal", (CriterionOption("low", 0.0), CriterionOption("mid", 0.9), CriterionOption("high", 1.0)))
    assert aggregate_score(Rubric([c]), [Verdict.choice(1)]) == 0.9
