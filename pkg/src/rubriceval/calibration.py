"""Train/test splitting and verdict-balanced few-shot exemplars."""

from __future__ import annotations

import math
import random
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Hashable, Optional, Sequence

from .judging import derive_item_seed
from .rubric import Criterion, Verdict, VerdictKind


@dataclass(frozen=True)
class FewShotConfig:
    n_examples: int = 3
    balance_verdicts: bool = True
    include_reason: bool = False
    seed: int = 42

    def __post_init__(self) -> None:
        if self.n_examples < 0:
            raise ValueError("n_examples must be non-negative")


@dataclass(frozen=True)
class DatasetSplit:
    train: list
    test: list


def _default_stratum(item) -> Hashable:
    gt = getattr(item, "ground_truth", None)
    if not gt:
        raise ValueError("stratify=True needs strata_key or items with ground truth")
    return str(gt[0])


def split_train_test(
    items: Sequence,
    n_train: Optional[int] = None,
    train_fraction: Optional[float] = None,
    stratify: bool = False,
    strata_key: Optional[Callable[[object], Hashable]] = None,
    seed: int = 42,
) -> DatasetSplit:
    """Deterministic split; original item order is preserved within each side.

    With ``stratify`` the train quota is spread over strata by largest
    remainder, so each stratum's train count is within one of its
    proportional share. Without ``strata_key`` the stratum is the first
    ground-truth label.
    """
    items = list(items)
    if (n_train is None) == (train_fraction is None):
        raise ValueError("give exactly one of n_train or train_fraction")
    if n_train is None:
        n_train = int(round(train_fraction * len(items)))
    if not 0 <= n_train < len(items):
        raise ValueError(f"n_train must lie in [0, {len(items)})")
    rng = random.Random(seed)

    if not stratify:
        chosen = set(rng.sample(range(len(items)), n_train))
    else:
        key = strata_key or _default_stratum
        strata: dict[Hashable, list[int]] = defaultdict(list)
        for i, item in enumerate(items):
            strata[key(item)].append(i)
        order = sorted(strata, key=str)
        shares = {s: n_train * len(strata[s]) / len(items) for s in order}
        quota = {s: math.floor(shares[s]) for s in order}
        leftover = n_train - sum(quota.values())
        by_remainder = sorted(order, key=lambda s: (-(shares[s] - quota[s]), str(s)))
        for s in by_remainder[:leftover]:
            quota[s] += 1
        chosen = set()
        for s in order:
            chosen.update(rng.sample(strata[s], quota[s]))
    train = [it for i, it in enumerate(items) if i in chosen]
    test = [it for i, it in enumerate(items) if i not in chosen]
    return DatasetSplit(train, test)


@dataclass(frozen=True)
class Exemplar:
    submission: str
    verdict: Verdict
    label: str
    reason: Optional[str] = None


def _labelled(train_items: Sequence, criterion_index: int, criterion: Criterion) -> list[Exemplar]:
    out = []
    for item in train_items:
        gt = getattr(item, "ground_truth", None)
        if not gt:
            continue
        verdict = gt[criterion_index]
        if verdict.kind is VerdictKind.CANNOT_ASSESS:
            continue
        reasons = getattr(item, "rationales", None)
        reason = reasons[criterion_index] if reasons else None
        out.append(Exemplar(item.submission, verdict, verdict.label_for(criterion), reason))
    return out


def sample_few_shot(
    train_items: Sequence,
    criterion_index: int,
    criterion: Criterion,
    config: FewShotConfig,
) -> list[Exemplar]:
    """Pick up to ``config.n_examples`` exemplars for one criterion.

    Balanced sampling draws round-robin across verdict classes (MET/UNMET,
    or option classes in option order) from shuffled per-class pools, so
    class counts differ by at most one until a class runs dry. The random
    stream depends only on the config seed and the criterion id.
    """
    if config.n_examples == 0:
        return []
    pool = _labelled(train_items, criterion_index, criterion)
    rng = random.Random(derive_item_seed(config.seed, "few-shot", criterion.id or str(criterion_index), ""))
    if not config.balance_verdicts:
        return rng.sample(pool, min(config.n_examples, len(pool)))

    if criterion.is_binary:
        classes = [Verdict(VerdictKind.MET), Verdict(VerdictKind.UNMET)]
        rng.shuffle(classes)
    else:
        classes = [Verdict.choice(i) for i in range(len(criterion.options))]
    buckets = {c: [e for e in pool if e.verdict == c] for c in classes}
    for c in classes:
        rng.shuffle(buckets[c])
    picked: list[Exemplar] = []
    while len(picked) < config.n_examples and any(buckets.values()):
        for c in classes:
            if buckets[c] and len(picked) < config.n_examples:
                picked.append(buckets[c].pop())
    return picked


def render_exemplars(exemplars: Sequence[Exemplar], include_reason: bool = False) -> str:
    if not exemplars:
        return ""
    sections = []
    for n, ex in enumerate(exemplars, start=1):
        lines = [f'<example index="{n}">', f"<submission>\n{ex.submission}\n</submission>", f"<verdict>{ex.label}</verdict>"]
        if include_reason and ex.reason:
            lines.append(f"<reasoning>{ex.reason}</reasoning>")
        lines.append("</example>")
        sections.append("\n".join(lines))
    return "<examples>\n" + "\n".join(sections) + "\n</examples>"
