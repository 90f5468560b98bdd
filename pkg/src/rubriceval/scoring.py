"""Weighted score aggregation and CANNOT_ASSESS handling.

    score = clamp(sum(v_i * w_i) / sum(w_i for w_i > 0), 0, 1)

Negative weights enter the numerator only, so a perfect response scores
exactly 1 and penalties can pull the score down to (but not below) 0.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

from .rubric import Criterion, Rubric, Verdict, VerdictKind, check_verdicts


class UndefinedScoreError(ValueError):
    """Every positive-weight criterion was excluded from the denominator."""


class CAStrategy(str, enum.Enum):
    SKIP = "skip"
    ZERO = "zero"
    PARTIAL = "partial"
    FAIL = "fail"


@dataclass(frozen=True)
class CannotAssessStrategy:
    kind: CAStrategy = CAStrategy.SKIP
    partial_credit: float = 0.5

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", CAStrategy(self.kind))
        if not 0.0 <= self.partial_credit <= 1.0:
            raise ValueError("partial_credit must lie in [0, 1]")

    @classmethod
    def parse(cls, text: str) -> "CannotAssessStrategy":
        """Parse ``skip``, ``zero``, ``fail``, ``partial`` or ``partial:0.3``."""
        name, _, credit = text.lower().partition(":")
        if credit:
            return cls(CAStrategy(name), float(credit))
        return cls(CAStrategy(name))

    def __str__(self) -> str:
        if self.kind is CAStrategy.PARTIAL:
            return f"partial:{self.partial_credit}"
        return self.kind.value


SKIP = CannotAssessStrategy(CAStrategy.SKIP)
ZERO = CannotAssessStrategy(CAStrategy.ZERO)
FAIL = CannotAssessStrategy(CAStrategy.FAIL)


def PARTIAL(credit: float) -> CannotAssessStrategy:
    return CannotAssessStrategy(CAStrategy.PARTIAL, credit)


def verdict_value(criterion: Criterion, verdict: Verdict) -> Optional[float]:
    """Scoring value of a verdict, or None when it is not assessable.

    CANNOT_ASSESS and selections of an ``na`` option are not assessable.
    """
    verdict.check_for(criterion)
    if verdict.kind is VerdictKind.MET:
        return 1.0
    if verdict.kind is VerdictKind.UNMET:
        return 0.0
    if verdict.kind is VerdictKind.CANNOT_ASSESS:
        return None
    opt = criterion.options[verdict.option]
    return None if opt.na else opt.value


def resolve_cannot_assess(criterion: Criterion, strategy: CannotAssessStrategy) -> Optional[float]:
    """Verdict value to use in place of a not-assessable verdict.

    Returns None when the criterion drops out of numerator and denominator.
    The returned value is multiplied by the (signed) weight, so PARTIAL on a
    penalty criterion applies a partial penalty and FAIL applies the full one.
    """
    kind = strategy.kind
    if kind is CAStrategy.SKIP:
        return None
    if kind is CAStrategy.ZERO:
        return 0.0
    if kind is CAStrategy.PARTIAL:
        return strategy.partial_credit
    return 0.0 if criterion.weight > 0 else 1.0


def score_values(rubric: Rubric, values: Sequence[Optional[float]], strategy: CannotAssessStrategy = SKIP) -> float:
    """Aggregate per-criterion values (None = not assessable) into a score."""
    if len(values) != len(rubric):
        raise ValueError(f"expected {len(rubric)} values, got {len(values)}")
    numerator = 0.0
    denominator = 0.0
    for criterion, value in zip(rubric.criteria, values):
        if value is None:
            value = resolve_cannot_assess(criterion, strategy)
            if value is None:
                continue
        numerator += value * criterion.weight
        if criterion.weight > 0:
            denominator += criterion.weight
    if denominator == 0:
        raise UndefinedScoreError("no positive-weight criterion left after excluding unassessable ones")
    return max(0.0, min(1.0, numerator / denominator))


def aggregate_score(
    rubric: Rubric,
    verdicts: Sequence[Verdict],
    strategy: CannotAssessStrategy = SKIP,
    values: Optional[Sequence[Optional[float]]] = None,
) -> float:
    """Score a verdict vector.

    ``values`` may override individual verdict values (non-None entries
    win); ensembles use this to feed averaged option values.
    """
    check_verdicts(rubric, verdicts)
    resolved = [verdict_value(c, v) for c, v in zip(rubric.criteria, verdicts)]
    if values is not None:
        resolved = [o if o is not None else r for r, o in zip(resolved, values)]
    return score_values(rubric, resolved, strategy)
