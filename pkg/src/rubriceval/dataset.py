"""Rubric datasets: JSON load/save, ground-truth encoding and label statistics.

File layout::

    {
      "task_prompt": "...",                  # optional
      "rubric": {"criteria": [...]},
      "items": [
        {"item_id": "...", "submission": "...", "description": "...",
         "ground_truth": ["MET", "Somewhat satisfied", ...]}
      ]
    }

``item_id`` defaults to the item's position. ``description`` is carried
along for humans and never reaches a judge.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional, Sequence

from .calibration import DatasetSplit, split_train_test
from .rubric import CANNOT_ASSESS, MET, UNMET, Criterion, Rubric, RubricError, Verdict, validate_rubric


class DatasetError(ValueError):
    pass


_BINARY_LABELS = {"MET": MET, "TRUE": MET, "UNMET": UNMET, "FALSE": UNMET, "CANNOT_ASSESS": CANNOT_ASSESS}


def encode_ground_truth(label: Any, criterion: Criterion) -> Verdict:
    """Map a raw annotation onto a verdict.

    Binary criteria accept MET/UNMET/TRUE/FALSE (and JSON booleans); choice
    criteria accept an exact, case-sensitive option label.
    """
    if isinstance(label, Verdict):
        label.check_for(criterion)
        return label
    if criterion.is_binary:
        if isinstance(label, bool):
            return MET if label else UNMET
        if isinstance(label, str) and label in _BINARY_LABELS:
            return _BINARY_LABELS[label]
        raise DatasetError(f"criterion {criterion.id}: unknown label {label!r}; valid: {sorted(_BINARY_LABELS)}")
    if label == "CANNOT_ASSESS":
        return CANNOT_ASSESS
    try:
        return Verdict.choice(criterion.option_index(label))
    except KeyError:
        valid = [o.label for o in criterion.options]
        raise DatasetError(f"criterion {criterion.id}: unknown label {label!r}; valid: {valid}") from None


@dataclass(frozen=True)
class DatasetItem:
    item_id: str
    submission: str
    description: Optional[str] = None
    ground_truth: Optional[tuple[Verdict, ...]] = None
    rationales: Optional[tuple[str, ...]] = None

    def to_dict(self, rubric: Rubric) -> dict:
        out: dict[str, Any] = {"item_id": self.item_id, "submission": self.submission}
        if self.description is not None:
            out["description"] = self.description
        if self.ground_truth is not None:
            out["ground_truth"] = [v.label_for(c) for c, v in zip(rubric.criteria, self.ground_truth)]
        if self.rationales is not None:
            out["rationales"] = list(self.rationales)
        return out


@dataclass(frozen=True)
class RubricDataset:
    rubric: Rubric
    items: tuple[DatasetItem, ...]
    task_prompt: Optional[str] = None
    name: Optional[str] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))
        for item in self.items:
            if item.ground_truth is not None and len(item.ground_truth) != len(self.rubric):
                raise DatasetError(
                    f"item {item.item_id}: ground_truth has {len(item.ground_truth)} labels, rubric has {len(self.rubric)} criteria"
                )

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    @property
    def has_ground_truth(self) -> bool:
        return bool(self.items) and all(it.ground_truth is not None for it in self.items)

    def with_items(self, items: Sequence[DatasetItem]) -> "RubricDataset":
        return replace(self, items=tuple(items))

    def split_train_test(self, n_train=None, train_fraction=None, stratify=False, strata_key=None, seed=42) -> DatasetSplit:
        split = split_train_test(self.items, n_train, train_fraction, stratify, strata_key, seed)
        return DatasetSplit(self.with_items(split.train), self.with_items(split.test))

    @classmethod
    def from_dict(cls, data: dict, name: Optional[str] = None) -> "RubricDataset":
        if not isinstance(data, dict):
            raise DatasetError("$: expected a JSON object")
        if "rubric" not in data:
            raise DatasetError("$.rubric: missing")
        if not isinstance(data.get("items"), list):
            raise DatasetError("$.items: expected a list")
        try:
            rubric = Rubric.from_dict(data["rubric"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"$.rubric: {exc}") from exc
        problems = validate_rubric(rubric)
        if problems:
            raise DatasetError("$.rubric: " + "; ".join(problems))
        items = []
        for i, raw in enumerate(data["items"]):
            where = f"$.items[{i}]"
            if not isinstance(raw, dict) or not isinstance(raw.get("submission"), str):
                raise DatasetError(f"{where}.submission: missing or not a string")
            item_id = str(raw.get("item_id", i))
            gt = raw.get("ground_truth")
            verdicts = None
            if gt is not None:
                if not isinstance(gt, list) or len(gt) != len(rubric):
                    n = len(gt) if isinstance(gt, list) else "non-list"
                    raise DatasetError(
                        f"{where}.ground_truth: item {item_id} has {n} labels, rubric has {len(rubric)} criteria"
                    )
                try:
                    verdicts = tuple(encode_ground_truth(lbl, c) for lbl, c in zip(gt, rubric.criteria))
                except (DatasetError, RubricError) as exc:
                    raise DatasetError(f"{where}.ground_truth (item {item_id}): {exc}") from exc
            rationales = raw.get("rationales")
            items.append(
                DatasetItem(
                    item_id=item_id,
                    submission=raw["submission"],
                    description=raw.get("description"),
                    ground_truth=verdicts,
                    rationales=tuple(rationales) if rationales is not None else None,
                )
            )
        ids = [it.item_id for it in items]
        if len(set(ids)) != len(ids):
            raise DatasetError("$.items: duplicate item_id")
        return cls(rubric, tuple(items), data.get("task_prompt"), name)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {}
        if self.task_prompt is not None:
            out["task_prompt"] = self.task_prompt
        out["rubric"] = self.rubric.to_dict()
        out["items"] = [it.to_dict(self.rubric) for it in self.items]
        return out


def load_dataset(path: str | Path) -> RubricDataset:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: invalid JSON ({exc})") from exc
    return RubricDataset.from_dict(data, name=path.stem)


def save_dataset(dataset: RubricDataset, path: str | Path) -> None:
    Path(path).write_text(json.dumps(dataset.to_dict(), indent=2, sort_keys=True, ensure_ascii=False))


def normalized_entropy(counts: Sequence[float]) -> float:
    """Shannon entropy divided by log(k), k = number of categories."""
    k = len(counts)
    total = float(sum(counts))
    if k < 2 or total == 0:
        return 0.0
    h = -sum((c / total) * math.log(c / total) for c in counts if c > 0)
    return h / math.log(k)


@dataclass(frozen=True)
class CriterionStats:
    criterion_id: str
    counts: dict[str, int]
    majority_fraction: float
    normalized_entropy: float


def dataset_stats(dataset: RubricDataset) -> list[CriterionStats]:
    """Per-criterion label counts, majority share and normalized entropy.

    The entropy support is the criterion's non-na categories (MET/UNMET for
    binary); na and CANNOT_ASSESS labels count toward totals only.
    """
    if not dataset.has_ground_truth:
        raise DatasetError("dataset_stats needs ground truth on every item")
    out = []
    for j, c in enumerate(dataset.rubric.criteria):
        labels = Counter(it.ground_truth[j].label_for(c) for it in dataset.items)
        if c.is_binary:
            support = ["MET", "UNMET"]
        else:
            support = [o.label for o in c.options if not o.na]
        total = sum(labels.values())
        out.append(
            CriterionStats(
                criterion_id=c.id,
                counts=dict(labels),
                majority_fraction=max(labels.values()) / total,
                normalized_entropy=normalized_entropy([labels.get(s, 0) for s in support]),
            )
        )
    return out
