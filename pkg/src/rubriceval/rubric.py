"""Rubric definitions: criteria, options, verdicts and per-item reports.

A rubric is an ordered list of weighted criteria. Each criterion is binary
(MET/UNMET) or multi-choice (ordinal or nominal) with explicit option values
in [0, 1]. Everything here is immutable after construction, so rubrics and
reports can be shared freely between concurrent evaluation tasks.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence


class RubricError(ValueError):
    """Raised when a rubric or verdict violates its invariants."""


class InvalidVerdictError(RubricError):
    pass


class ScaleType(str, enum.Enum):
    BINARY = "binary"
    ORDINAL = "ordinal"
    NOMINAL = "nominal"


@dataclass(frozen=True)
class CriterionOption:
    label: str
    value: float
    na: bool = False

    @classmethod
    def from_dict(cls, data: dict) -> "CriterionOption":
        return cls(
            label=data["label"],
            value=float(data.get("value", 0.0)),
            na=bool(data.get("na", False)),
        )

    def to_dict(self) -> dict:
        return {"label": self.label, "value": self.value, "na": self.na}


@dataclass(frozen=True)
class Criterion:
    """One unidimensional requirement.

    A negative ``weight`` turns the criterion into a penalty: MET means the
    undesirable thing is present. For ordinal criteria the option order is
    the scale order; option values need not be evenly spaced.
    """

    requirement: str
    weight: float = 1.0
    scale_type: ScaleType = ScaleType.BINARY
    options: tuple[CriterionOption, ...] = ()
    id: Optional[str] = None
    name: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "scale_type", ScaleType(self.scale_type))
        opts = tuple(
            o if isinstance(o, CriterionOption) else CriterionOption.from_dict(o)
            for o in self.options
        )
        object.__setattr__(self, "options", opts)
        object.__setattr__(self, "weight", float(self.weight))

    @property
    def is_binary(self) -> bool:
        return self.scale_type is ScaleType.BINARY

    @property
    def is_penalty(self) -> bool:
        return self.weight < 0

    @property
    def display_name(self) -> str:
        return self.name or self.id or self.requirement

    def option_index(self, label: str) -> int:
        for i, opt in enumerate(self.options):
            if opt.label == label:
                return i
        raise KeyError(label)

    @classmethod
    def from_dict(cls, data: dict) -> "Criterion":
        return cls(
            requirement=data["requirement"],
            weight=data.get("weight", 1.0),
            scale_type=data.get("scale_type", "binary"),
            options=tuple(CriterionOption.from_dict(o) for o in data.get("options", ())),
            id=data.get("id"),
            name=data.get("name"),
        )

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "id": self.id,
            "requirement": self.requirement,
            "weight": self.weight,
            "scale_type": self.scale_type.value,
            "options": [o.to_dict() for o in self.options],
        }
        if self.name is not None:
            out["name"] = self.name
        return out


@dataclass(frozen=True)
class Rubric:
    """Ordered criteria. Criteria without an id get ``c0, c1, ...`` by position.

    Construction does not validate; call :func:`validate_rubric` (or
    :meth:`check`) to get the list of violations.
    """

    criteria: tuple[Criterion, ...]

    def __init__(self, criteria: Iterable[Criterion]):
        fixed = []
        for i, c in enumerate(criteria):
            if isinstance(c, dict):
                c = Criterion.from_dict(c)
            if c.id is None:
                c = Criterion(c.requirement, c.weight, c.scale_type, c.options, f"c{i}", c.name)
            fixed.append(c)
        object.__setattr__(self, "criteria", tuple(fixed))

    def __len__(self) -> int:
        return len(self.criteria)

    def __iter__(self):
        return iter(self.criteria)

    def __getitem__(self, i: int) -> Criterion:
        return self.criteria[i]

    @property
    def ids(self) -> list[str]:
        return [c.id for c in self.criteria]

    def check(self) -> "Rubric":
        problems = validate_rubric(self)
        if problems:
            raise RubricError("; ".join(problems))
        return self

    @classmethod
    def from_dict(cls, data: dict | list) -> "Rubric":
        if isinstance(data, list):
            data = {"criteria": data}
        return cls(Criterion.from_dict(c) for c in data["criteria"])

    def to_dict(self) -> dict:
        return {"criteria": [c.to_dict() for c in self.criteria]}

    @classmethod
    def load(cls, path: str | Path) -> "Rubric":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))


def validate_rubric(rubric: Rubric) -> list[str]:
    """Return every invariant violation; an empty list means the rubric is valid."""
    problems: list[str] = []
    seen: set[str] = set()
    for i, c in enumerate(rubric.criteria):
        where = f"criterion {c.id or i}"
        if c.id in seen:
            problems.append(f"{where}: duplicate id")
        seen.add(c.id)
        if not c.requirement or not c.requirement.strip():
            problems.append(f"{where}: empty requirement")
        if c.weight == 0:
            problems.append(f"{where}: zero weight")
        if c.is_binary:
            if c.options:
                problems.append(f"{where}: binary criterion must not carry options")
        elif len(c.options) < 2:
            problems.append(f"{where}: {c.scale_type.value} requires ≥2 options")
        for opt in c.options:
            if not opt.label:
                problems.append(f"{where}: option with empty label")
            if not 0.0 <= opt.value <= 1.0:
                problems.append(f"{where}: option {opt.label!r} value {opt.value} outside [0, 1]")
    if not any(c.weight > 0 for c in rubric.criteria):
        problems.append("no positive-weight criterion")
    return problems


def total_positive_weight(rubric: Rubric) -> float:
    return float(sum(c.weight for c in rubric.criteria if c.weight > 0))


class VerdictKind(str, enum.Enum):
    MET = "MET"
    UNMET = "UNMET"
    CANNOT_ASSESS = "CANNOT_ASSESS"
    CHOICE = "CHOICE"


@dataclass(frozen=True)
class Verdict:
    """Outcome of judging one criterion.

    ``option`` is the 0-based index into the criterion's *original* option
    list and is only set for CHOICE verdicts.
    """

    kind: VerdictKind
    option: Optional[int] = None

    @classmethod
    def choice(cls, index: int) -> "Verdict":
        return cls(VerdictKind.CHOICE, int(index))

    @property
    def is_choice(self) -> bool:
        return self.kind is VerdictKind.CHOICE

    def __str__(self) -> str:
        if self.is_choice:
            return f"CHOICE:{self.option}"
        return self.kind.value

    @classmethod
    def parse(cls, text: str) -> "Verdict":
        if text.startswith("CHOICE:"):
            return cls.choice(int(text.split(":", 1)[1]))
        return cls(VerdictKind(text))

    def check_for(self, criterion: Criterion) -> None:
        if self.kind is VerdictKind.CANNOT_ASSESS:
            return
        if criterion.is_binary and self.is_choice:
            raise InvalidVerdictError(f"CHOICE verdict on binary criterion {criterion.id}")
        if not criterion.is_binary:
            if not self.is_choice:
                raise InvalidVerdictError(f"{self.kind.value} on {criterion.scale_type.value} criterion {criterion.id}")
            if not 0 <= self.option < len(criterion.options):
                raise InvalidVerdictError(f"option {self.option} out of range for criterion {criterion.id}")

    def label_for(self, criterion: Criterion) -> str:
        """Human label: MET/UNMET/CANNOT_ASSESS or the option label."""
        if self.is_choice:
            return criterion.options[self.option].label
        return self.kind.value


MET = Verdict(VerdictKind.MET)
UNMET = Verdict(VerdictKind.UNMET)
CANNOT_ASSESS = Verdict(VerdictKind.CANNOT_ASSESS)


@dataclass(frozen=True)
class Vote:
    judge_name: str
    verdict: Verdict
    reason: str
    permutation: Optional[tuple[int, ...]] = None
    error: Optional[str] = None

    def to_dict(self) -> dict:
        out = {"judge": self.judge_name, "verdict": str(self.verdict), "reason": self.reason}
        if self.permutation is not None:
            out["permutation"] = list(self.permutation)
        if self.error is not None:
            out["error"] = self.error
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Vote":
        perm = data.get("permutation")
        return cls(
            data["judge"],
            Verdict.parse(data["verdict"]),
            data["reason"],
            tuple(perm) if perm is not None else None,
            data.get("error"),
        )


@dataclass(frozen=True)
class CriterionReport:
    """Final verdict for one criterion plus the mandatory explanation.

    ``value`` overrides the verdict's scoring value; it is set when votes
    were combined by averaging option values.
    """

    criterion_id: str
    verdict: Verdict
    reason: str
    votes: tuple[Vote, ...] = ()
    value: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.reason or not self.reason.strip():
            raise RubricError(f"criterion {self.criterion_id}: reason must be non-empty")

    def to_dict(self) -> dict:
        return {
            "criterion_id": self.criterion_id,
            "verdict": str(self.verdict),
            "reason": self.reason,
            "value": self.value,
            "votes": [v.to_dict() for v in self.votes],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CriterionReport":
        return cls(
            data["criterion_id"],
            Verdict.parse(data["verdict"]),
            data["reason"],
            tuple(Vote.from_dict(v) for v in data.get("votes", ())),
            data.get("value"),
        )


@dataclass(frozen=True)
class EnsembleEvaluationReport:
    item_id: str
    reports: tuple[CriterionReport, ...]
    score: Optional[float]
    mean_agreement: Optional[float] = None
    total_cost: float = 0.0
    total_tokens: int = 0
    duration_seconds: float = 0.0
    errors: tuple[str, ...] = field(default=())

    @property
    def verdicts(self) -> list[Verdict]:
        return [r.verdict for r in self.reports]

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "score": self.score,
            "mean_agreement": self.mean_agreement,
            "criteria": [r.to_dict() for r in self.reports],
            "cost": self.total_cost,
            "tokens": self.total_tokens,
            "duration_seconds": self.duration_seconds,
            "errors": list(self.errors),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EnsembleEvaluationReport":
        return cls(
            item_id=data["item_id"],
            reports=tuple(CriterionReport.from_dict(r) for r in data["criteria"]),
            score=data["score"],
            mean_agreement=data.get("mean_agreement"),
            total_cost=data.get("cost", 0.0),
            total_tokens=data.get("tokens", 0),
            duration_seconds=data.get("duration_seconds", 0.0),
            errors=tuple(data.get("errors", ())),
        )


def check_verdicts(rubric: Rubric, verdicts: Sequence[Verdict]) -> None:
    """Check a verdict vector against a rubric (length and per-criterion validity)."""
    if len(verdicts) != len(rubric):
        raise InvalidVerdictError(f"expected {len(rubric)} verdicts, got {len(verdicts)}")
    for c, v in zip(rubric.criteria, verdicts):
        v.check_for(c)
