"""
Scoring a submission by hand
============================

A rubric is a list of weighted criteria. Positive weights reward a
property, negative weights penalize one. The score is the weighted share
of positive weight earned, clamped to [0, 1].
"""

from rubriceval import (
    CANNOT_ASSESS,
    FAIL,
    MET,
    PARTIAL,
    SKIP,
    UNMET,
    ZERO,
    Criterion,
    Rubric,
    aggregate_score,
    validate_rubric,
)

rubric = Rubric(
    [
        Criterion("Explains the causes of the industrial revolution", 30, name="Causes"),
        Criterion("Explains its social and economic effects", 30, name="Effects"),
        Criterion("Has a clear structure", 12, name="Structure"),
        Criterion("Mentions Britain as the starting point", 8, name="Britain"),
        Criterion("Contains factual errors", -15, name="Errors"),
    ]
)
print("problems:", validate_rubric(rubric) or "none")

# Everything met, including the penalty: (80 - 15) / 80
print(aggregate_score(rubric, [MET] * 5))

# Penalty avoided gives full marks
print(aggregate_score(rubric, [MET, MET, MET, MET, UNMET]))

# When a judge cannot decide, the strategy picks what that criterion is worth.
# SKIP drops it from the denominator, ZERO counts it as missed,
# PARTIAL gives fractional credit, FAIL assumes the worst.
unsure = [MET, CANNOT_ASSESS, MET, UNMET, CANNOT_ASSESS]
for strategy in (SKIP, ZERO, PARTIAL(0.5), FAIL):
    print(f"{str(strategy):12s} {aggregate_score(rubric, unsure, strategy):.4f}")
