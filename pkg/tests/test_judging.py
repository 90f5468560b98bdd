import asyncio
import itertools
import json
from collections import Counter

import pytest
from scipy import stats

from rubriceval import (
    CANNOT_ASSESS,
    MET,
    UNMET,
    Criterion,
    JudgeConfig,
    ScriptedBackend,
    Verdict,
    build_binary_prompt,
    build_choice_prompt,
    derive_item_seed,
    judge_criterion,
    parse_binary_response,
    parse_choice_response,
    shuffle_options,
)
from rubriceval.judging import BINARY_SYSTEM_PROMPT, CHOICE_SYSTEM_PROMPT, ParseError, TransportError
from rubriceval.calibration import Exemplar, render_exemplars
from rubriceval.rubric import CriterionOption
from rubriceval.testing import shown_options

from conftest import chatbot_rubric, met_json


def test_seed_is_deterministic():
    assert derive_item_seed(42, "item1", "c0", "judge") == derive_item_seed(42, "item1", "c0", "judge")
    assert 0 <= derive_item_seed(42, "item1", "c0", "judge") < 2**64


def _splitmix_finalize(h):
    mask = 2**64 - 1
    h ^= h >> 30
    h = (h * 0xBF58476D1CE4E5B9) & mask
    h ^= h >> 27
    h = (h * 0x94D049BB133111EB) & mask
    return h ^ (h >> 31)


def test_seed_pinned():
    # FNV-1a of "42|item1|c0|judge" computed independently
    assert _splitmix_finalize(17637555845632441715) == 15344926645817159459
    assert derive_item_seed(42, "item1", "c0", "judge") == 15344926645817159459


def test_seed_no_collisions_over_criterion_ids():
    seeds = {derive_item_seed(42, "item", f"crit{i}", "judge") for i in range(10_000)}
    assert len(seeds) == 10_000


def test_seed_no_collisions_over_judges():
    seeds = {derive_item_seed(42, "item", "crit", f"judge-{i}") for i in range(10_000)}
    assert len(seeds) == 10_000


def test_shuffle_singleton():
    assert shuffle_options(["a"], 123) == (["a"], (0,))


def test_shuffle_reproducible():
    opts = list("abcde")
    assert shuffle_options(opts, 99) == shuffle_options(opts, 99)


def test_shuffle_returns_consistent_permutation():
    opts = list("abcde")
    shown, perm = shuffle_options(opts, 7)
    assert sorted(perm) == list(range(5))
    assert shown == [opts[i] for i in perm]


def test_shuffle_uniform_chi_square():
    counts = Counter(shuffle_options(list(range(4)), seed)[1] for seed in range(10_000))
    observed = [counts[p] for p in itertools.permutations(range(4))]
    assert len(counts) == 24
    assert stats.chisquare(observed).pvalue > 0.01


def test_binary_prompt_contents():
    c = Criterion("Contains hallucinated citations", -15)
    bundle = build_binary_prompt(c, "The essay.", task_prompt="Write an essay.")
    assert bundle.system_text == BINARY_SYSTEM_PROMPT
    assert "<criterion_type>negative</criterion_type>" in bundle.user_text
    assert "Contains hallucinated citations" in bundle.user_text
    assert "The essay." in bundle.user_text
    assert "Write an essay." in bundle.user_text
    assert "<examples>" not in bundle.user_text
    assert bundle.permutation == ()


def test_binary_prompt_positive_and_override():
    bundle = build_binary_prompt(Criterion("x", 2), "s", system_text="custom")
    assert "<criterion_type>positive</criterion_type>" in bundle.user_text
    assert bundle.system_text == "custom"


def test_exemplars_in_prompt():
    exemplars = [Exemplar("sub A", MET, "MET", "cites it"), Exemplar("sub B", UNMET, "UNMET", "misses it")]
    block = render_exemplars(exemplars, include_reason=True)
    bundle = build_binary_prompt(Criterion("x"), "graded", exemplars=block)
    text = bundle.user_text
    assert "sub A" in text and "<verdict>MET</verdict>" in text and "cites it" in text
    assert text.index("<examples>") < text.index("<submission>\ngraded")
    plain = build_binary_prompt(Criterion("x"), "graded", exemplars=render_exemplars(exemplars, False)).user_text
    assert "cites it" not in plain and "<reasoning>" not in plain


def test_choice_prompt_identity_without_shuffle():
    c = chatbot_rubric()[0]
    bundle = build_choice_prompt(c, "s", seed=1, shuffle=False)
    assert bundle.permutation == (0, 1, 2, 3)
    assert bundle.system_text == CHOICE_SYSTEM_PROMPT
    assert shown_options(bundle.user_text) == {o.label: i + 1 for i, o in enumerate(c.options)}


def test_choice_prompt_numbers_bijective():
    c = chatbot_rubric()[5]  # five options incl. N/A
    bundle = build_choice_prompt(c, "s", seed=5, shuffle=True)
    numbers = sorted(shown_options(bundle.user_text).values())
    assert numbers == [1, 2, 3, 4, 5]
    assert build_choice_prompt(c, "s", seed=5, shuffle=True) == bundle


def test_parse_binary_plain():
    assert parse_binary_response('{"criterion_status": "MET", "explanation": "cites the law"}') == (MET, "cites the law")


def test_parse_binary_fenced_and_prose():
    corpus = {
        '```json\n{"criterion_status":"UNMET","explanation":"x"}\n```': (UNMET, "x"),
        'Sure! Here is my verdict: {"criterion_status": "CANNOT_ASSESS", "explanation": "garbled"} Thanks.': (CANNOT_ASSESS, "garbled"),
        'noise {not json} then {"criterion_status": "met", "explanation": "has {braces}"}': (MET, "has {braces}"),
        '{"explanation": "nested \\"quote\\" }", "criterion_status": "UNMET"}': (UNMET, 'nested "quote" }'),
    }
    for raw, expected in corpus.items():
        assert parse_binary_response(raw) == expected


@pytest.mark.parametrize(
    "raw",
    [
        '{"criterion_status": "MAYBE", "explanation": "hm"}',
        "no json here",
        '{"criterion_status": "MET"}',
        '{"criterion_status": "MET", "explanation": ""}',
    ],
)
def test_parse_binary_errors(raw):
    with pytest.raises(ParseError):
        parse_binary_response(raw)


def test_parse_choice_identity():
    assert parse_choice_response('{"selected_option": 2, "explanation": "e"}', (0, 1, 2, 3)) == (Verdict.choice(1), "e")


def test_parse_choice_inverse_permutation():
    # shuffled position 1 holds original option 3 (1-based) -> 0-based original index 2
    perm = (2, 0, 1)
    assert parse_choice_response('{"selected_option": 1, "explanation": "e"}', perm)[0] == Verdict.choice(2)


def test_parse_choice_out_of_range():
    with pytest.raises(ParseError):
        parse_choice_response('{"selected_option": 9, "explanation": "e"}', (0, 1, 2, 3))
    with pytest.raises(ParseError):
        parse_choice_response('{"selected_option": true, "explanation": "e"}', (0, 1, 2, 3))


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_round_trip_all_permutations(k):
    c = Criterion("q", 1, "nominal", tuple(CriterionOption(f"opt{i}", i / 5) for i in range(k)))
    for perm in itertools.permutations(range(k)):
        for original in range(k):
            position = perm.index(original) + 1
            raw = json.dumps({"selected_option": position, "explanation": "e"})
            assert parse_choice_response(raw, perm)[0] == Verdict.choice(original)


def _run(coro):
    return asyncio.run(coro)


def test_judge_criterion_pass_through():
    backend = ScriptedBackend({("i1", "c0", "j"): met_json("MET", "ok")}, prompt_tokens=10, completion_tokens=5, cost=0.001)
    vote, usage = _run(judge_criterion(backend, JudgeConfig(), Criterion("x", id="c0"), "s", item_id="i1", judge_name="j"))
    assert (vote.verdict, vote.reason) == (MET, "ok")
    assert (usage.prompt_tokens, usage.completion_tokens, usage.cost) == (10, 5, 0.001)
    assert backend.call_count == 1


def test_judge_criterion_garbage_twice():
    backend = ScriptedBackend({("i1", "c0", "j"): ["garbage", "more garbage"]}, cost=0.002)
    vote, usage = _run(judge_criterion(backend, JudgeConfig(), Criterion("x", id="c0"), "s", item_id="i1", judge_name="j"))
    assert vote.verdict == CANNOT_ASSESS
    assert "unparseable" in vote.reason
    assert backend.call_count == 2
    assert usage.cost == 0.004


def test_judge_criterion_recovers_on_requery():
    backend = ScriptedBackend({("i1", "c0", "j"): ["garbage", met_json("UNMET", "fixed")]})
    vote, _ = _run(judge_criterion(backend, JudgeConfig(), Criterion("x", id="c0"), "s", item_id="i1", judge_name="j"))
    assert (vote.verdict, vote.reason) == (UNMET, "fixed")


def test_judge_criterion_transport_failure():
    calls = []

    def fail(request):
        calls.append(request)
        raise TransportError("boom")

    backend = ScriptedBackend(responder=fail)
    cfg = JudgeConfig(backoff_base=0)
    vote, usage = _run(judge_criterion(backend, cfg, Criterion("x", id="c0"), "s", item_id="i1", judge_name="j"))
    assert vote.verdict == CANNOT_ASSESS
    assert vote.error and "boom" in vote.error
    assert len(calls) == 3
    assert usage.cost == 0


def test_judge_criterion_prompt_atomicity():
    rubric = chatbot_rubric()
    for criterion in rubric.criteria:
        backend = ScriptedBackend(responder=lambda r: r.messages[1]["content"])
        _run(judge_criterion(backend, JudgeConfig(), criterion, "sub", item_id="i", judge_name="j"))
        prompt = backend.calls[0].messages[1]["content"]
        present = [c.requirement for c in rubric.criteria if c.requirement in prompt]
        assert present == [criterion.requirement]


def test_judge_criterion_unshuffles_choice():
    c = chatbot_rubric()[0]

    def pick_somewhat_satisfied(request):
        shown = shown_options(request.messages[1]["content"])
        return json.dumps({"selected_option": shown["Somewhat satisfied"], "explanation": "e"})

    for seed in range(20):
        backend = ScriptedBackend(responder=pick_somewhat_satisfied)
        vote, _ = _run(judge_criterion(backend, JudgeConfig(), c, "s", master_seed=seed, item_id="i", judge_name="j"))
        assert vote.verdict == Verdict.choice(2)
        assert vote.permutation == build_choice_prompt(c, "s", derive_item_seed(seed, "i", c.id, "j")).permutation


def test_judge_config_validation():
    with pytest.raises(ValueError):
        JudgeConfig(max_parallel_requests=0)
    with pytest.raises(ValueError):
        JudgeConfig(thinking_level="extreme")
    assert JudgeConfig(thinking_level="HIGH").thinking_level == "high"
    assert JudgeConfig(thinking_level=2048).thinking_level == 2048
