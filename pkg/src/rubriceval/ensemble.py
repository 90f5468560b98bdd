"""Combining per-criterion votes from a panel of judges."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

from .rubric import CANNOT_ASSESS, MET, UNMET, Criterion, ScaleType, Verdict, VerdictKind
from .judging import JudgeConfig


class AggregationStrategy(str, enum.Enum):
    MAJORITY = "majority"
    WEIGHTED = "weighted"
    UNANIMOUS = "unanimous"
    ANY = "any"
    MEAN = "mean"


@dataclass
class JudgeSpec:
    name: str
    config: JudgeConfig = field(default_factory=JudgeConfig)
    weight: float = 1.0
    backend: object = None

    def __post_init__(self) -> None:
        if self.weight <= 0:
            raise ValueError(f"judge {self.name}: weight must be positive")


def aggregate_binary_votes(votes: Sequence[tuple[Verdict, float]], strategy: AggregationStrategy | str) -> Verdict:
    """Combine (verdict, judge weight) pairs for a binary criterion.

    CANNOT_ASSESS votes are dropped first; if nothing is left the result is
    CANNOT_ASSESS. Ties resolve to UNMET.
    """
    strategy = AggregationStrategy(strategy)
    if not votes:
        raise ValueError("no votes to aggregate")
    if strategy is AggregationStrategy.MEAN:
        raise ValueError("mean aggregation applies only to ordinal/nominal criteria")
    counted = [(v, w) for v, w in votes if v.kind is not VerdictKind.CANNOT_ASSESS]
    if not counted:
        return CANNOT_ASSESS
    for v, _ in counted:
        if v.kind not in (VerdictKind.MET, VerdictKind.UNMET):
            raise ValueError(f"{v} is not a binary verdict")
    met = [w for v, w in counted if v.kind is VerdictKind.MET]
    if strategy is AggregationStrategy.MAJORITY:
        return MET if 2 * len(met) > len(counted) else UNMET
    if strategy is AggregationStrategy.WEIGHTED:
        unmet_w = sum(w for v, w in counted if v.kind is VerdictKind.UNMET)
        return MET if sum(met) > unmet_w else UNMET
    if strategy is AggregationStrategy.UNANIMOUS:
        return MET if len(met) == len(counted) else UNMET
    return MET if met else UNMET


@dataclass(frozen=True)
class ChoiceOutcome:
    verdict: Verdict
    value: Optional[float] = None


def aggregate_choice_votes(
    criterion: Criterion,
    votes: Sequence[tuple[Verdict, float]],
    strategy: AggregationStrategy | str,
) -> ChoiceOutcome:
    """Combine CHOICE votes for an ordinal or nominal criterion.

    majority/weighted pick the modal option (lower index wins ties). mean
    averages option values with judge weights; the reported option is the
    one nearest the mean and ``value`` carries the mean itself. Nominal
    options can share a value, so there the reported option is the weighted
    mode, and unanimous votes always keep the option they named. Votes for
    ``na`` options are set aside like CANNOT_ASSESS; when they are all that
    is left, the most-voted na option is returned.
    """
    strategy = AggregationStrategy(strategy)
    if strategy in (AggregationStrategy.UNANIMOUS, AggregationStrategy.ANY):
        raise ValueError(f"{strategy.value} aggregation applies only to binary criteria")
    if not votes:
        raise ValueError("no votes to aggregate")
    counted = []
    na_counts: dict[int, int] = {}
    for v, w in votes:
        if v.kind is VerdictKind.CANNOT_ASSESS:
            continue
        if not v.is_choice:
            raise ValueError(f"{v} is not a choice verdict")
        if criterion.options[v.option].na:
            na_counts[v.option] = na_counts.get(v.option, 0) + 1
            continue
        counted.append((v.option, w))
    if not counted:
        if na_counts:
            best = min(na_counts, key=lambda i: (-na_counts[i], i))
            return ChoiceOutcome(Verdict.choice(best))
        return ChoiceOutcome(CANNOT_ASSESS)

    if strategy is AggregationStrategy.MEAN:
        total_w = sum(w for _, w in counted)
        mean = sum(criterion.options[i].value * w for i, w in counted) / total_w
        named = {i for i, _ in counted}
        if len(named) == 1:
            return ChoiceOutcome(Verdict.choice(named.pop()), mean)
        if criterion.scale_type is ScaleType.NOMINAL:
            return ChoiceOutcome(_mode(counted, weighted=True), mean)
        candidates = [i for i, o in enumerate(criterion.options) if not o.na]
        # 1e-12 slack so 0.5 vs {0.33, 0.67} counts as a tie and goes to the lower index
        nearest = min(candidates, key=lambda i: (round(abs(criterion.options[i].value - mean), 12), i))
        return ChoiceOutcome(Verdict.choice(nearest), mean)

    return ChoiceOutcome(_mode(counted, weighted=strategy is AggregationStrategy.WEIGHTED))


def _mode(counted: Sequence[tuple[int, float]], weighted: bool) -> Verdict:
    tally: dict[int, float] = {}
    for i, w in counted:
        tally[i] = tally.get(i, 0.0) + (w if weighted else 1.0)
    return Verdict.choice(min(tally, key=lambda i: (-tally[i], i)))


def criterion_agreement(verdicts: Sequence[Verdict]) -> Optional[float]:
    """Fraction of unordered judge pairs that returned identical verdicts."""
    pairs = list(combinations(verdicts, 2))
    if not pairs:
        return None
    return sum(a == b for a, b in pairs) / len(pairs)


def mean_agreement(per_criterion_votes: Sequence[Sequence[Verdict]]) -> Optional[float]:
    """Mean pairwise agreement over criteria; None with fewer than two judges."""
    scores = [criterion_agreement(vs) for vs in per_criterion_votes]
    scores = [s for s in scores if s is not None]
    if not scores:
        return None
    return sum(scores) / len(scores)
