"""Batch evaluation: N judges x M criteria per item, checkpointed to disk.

An experiment directory holds two files:

``manifest.json``
    master seed, a snapshot of the full grader configuration, run status,
    totals and timing statistics. Rewritten atomically; the first write
    happens before any judge is called.

``items.jsonl``
    one line per completed item (see
    :meth:`EnsembleEvaluationReport.to_dict`), appended in dataset order so
    that interrupted-and-resumed runs produce the same file as a straight
    run.
"""

from __future__ import annotations

import asyncio
import contextlib
import hashlib
import json
import logging
import math
import os
import random
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

from .backends import CachedBackend, HTTPBackend, ResponseCache, compute_cache_key, provider_of
from .calibration import Exemplar, FewShotConfig, render_exemplars, sample_few_shot
from .dataset import DatasetItem, RubricDataset
from .ensemble import AggregationStrategy, JudgeSpec, aggregate_binary_votes, aggregate_choice_votes, mean_agreement
from .judging import JudgeBackendResult, JudgeConfig, judge_criterion
from .rubric import CriterionReport, EnsembleEvaluationReport, Rubric, Vote, validate_rubric
from .scoring import SKIP, CannotAssessStrategy, UndefinedScoreError, aggregate_score

__all__ = [
    "EvalConfig",
    "EvalRunner",
    "RunResult",
    "TimingStats",
    "timing_stats",
    "run_eval",
    "resume_run",
    "compute_cache_key",
    "ResumeError",
    "RunAbortError",
]

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"
ITEMS = "items.jsonl"
TIMING_FIELDS = ("duration_seconds",)


class RunAbortError(RuntimeError):
    """The experiment directory cannot be used."""


class ResumeError(RuntimeError):
    """Resume refused: missing manifest or configuration drift."""


@dataclass
class EvalConfig:
    experiment_name: Optional[str] = None
    experiments_dir: str = "experiments"
    resume: bool = False
    master_seed: int = 42
    cannot_assess_strategy: CannotAssessStrategy = SKIP
    aggregation_strategy: AggregationStrategy = AggregationStrategy.MAJORITY
    choice_aggregation: AggregationStrategy = AggregationStrategy.MEAN
    few_shot: Optional[FewShotConfig] = None
    max_in_flight: int = 64
    max_concurrent_items: int = 16

    def __post_init__(self) -> None:
        if self.experiment_name is not None and not self.experiment_name.strip():
            raise ValueError("experiment_name must be non-empty")
        if isinstance(self.cannot_assess_strategy, str):
            self.cannot_assess_strategy = CannotAssessStrategy.parse(self.cannot_assess_strategy)
        self.aggregation_strategy = AggregationStrategy(self.aggregation_strategy)
        self.choice_aggregation = AggregationStrategy(self.choice_aggregation)
        if self.aggregation_strategy is AggregationStrategy.MEAN:
            raise ValueError("mean aggregation applies only to ordinal/nominal criteria")
        if self.choice_aggregation in (AggregationStrategy.UNANIMOUS, AggregationStrategy.ANY):
            raise ValueError("choice criteria support majority, weighted or mean aggregation")
        if isinstance(self.few_shot, dict):
            self.few_shot = FewShotConfig(**self.few_shot)

    def scoring_snapshot(self) -> dict:
        """The settings that change results; compared on resume."""
        return {
            "master_seed": self.master_seed,
            "cannot_assess_strategy": str(self.cannot_assess_strategy),
            "aggregation_strategy": self.aggregation_strategy.value,
            "choice_aggregation": self.choice_aggregation.value,
            "few_shot": asdict(self.few_shot) if self.few_shot else None,
        }


@dataclass(frozen=True)
class TimingStats:
    mean: float
    min: float
    max: float
    p50: float
    p95: float
    items_per_second: float


def _nearest_rank(sorted_values: Sequence[float], p: float) -> float:
    rank = max(1, math.ceil(p * len(sorted_values)))
    return sorted_values[rank - 1]


def timing_stats(durations: Sequence[float]) -> TimingStats:
    """Summary of per-item durations; percentiles by nearest rank."""
    if not durations:
        raise ValueError("timing_stats needs at least one duration")
    xs = sorted(float(d) for d in durations)
    total = sum(xs)
    return TimingStats(
        mean=total / len(xs),
        min=xs[0],
        max=xs[-1],
        p50=_nearest_rank(xs, 0.50),
        p95=_nearest_rank(xs, 0.95),
        items_per_second=len(xs) / total if total > 0 else float("inf"),
    )


_ADJECTIVES = ("slim", "brave", "calm", "eager", "quiet", "swift", "bold", "keen", "mild", "wise", "proud", "shy")
_ANIMALS = ("deer", "otter", "heron", "lynx", "finch", "badger", "moth", "seal", "wren", "yak", "newt", "crane")


def experiment_name(experiments_dir: str | Path, rng: Optional[random.Random] = None) -> str:
    """Random ``adjective-animal`` name, suffixed ``-2``, ``-3``... on collision."""
    rng = rng or random.Random()
    base = f"{rng.choice(_ADJECTIVES)}-{rng.choice(_ANIMALS)}"
    name, n = base, 1
    while (Path(experiments_dir) / name).exists():
        n += 1
        name = f"{base}-{n}"
    return name


class ProviderLimiter:
    """Per-provider semaphores under one global in-flight ceiling.

    Judges sharing an endpoint host share a bucket sized by the smallest
    ``max_parallel_requests`` among them.
    """

    def __init__(self, configs: Sequence[JudgeConfig], global_limit: int = 64):
        limits: dict[str, int] = {}
        for cfg in configs:
            p = provider_of(cfg)
            limits[p] = min(limits.get(p, cfg.max_parallel_requests), cfg.max_parallel_requests)
        self.limits = limits
        self._provider = {p: asyncio.Semaphore(n) for p, n in limits.items()}
        self._global = asyncio.Semaphore(global_limit)

    @contextlib.asynccontextmanager
    async def _slot(self, provider: str):
        async with self._global:
            async with self._provider[provider]:
                yield

    def __call__(self, config: JudgeConfig):
        return self._slot(provider_of(config))


@dataclass
class RunResult:
    experiment_dir: Path
    reports: list[EnsembleEvaluationReport]
    manifest: dict
    new_calls: int = 0
    session_call_cost: float = 0.0

    @property
    def total_completion_cost(self) -> float:
        return self.manifest["total_cost"]

    @property
    def total_token_usage(self) -> int:
        return self.manifest["total_tokens"]

    @property
    def timing(self) -> Optional[TimingStats]:
        t = self.manifest.get("timing")
        return TimingStats(**t) if t else None


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def read_items(path: Path) -> list[dict]:
    """Completed item records; a torn final line (crash mid-write) is dropped."""
    if not path.exists():
        return []
    records = []
    with open(path) as fh:
        for line in fh:
            if not line.endswith("\n"):
                break
            records.append(json.loads(line))
    return records


def strip_timing(record: dict) -> dict:
    return {k: v for k, v in record.items() if k not in TIMING_FIELDS}


def _fingerprint(items: Sequence[DatasetItem]) -> str:
    h = hashlib.sha256()
    for it in items:
        h.update(it.item_id.encode())
        h.update(b"\0")
        h.update(it.submission.encode())
        h.update(b"\0")
    return h.hexdigest()


class EvalRunner:
    def __init__(
        self,
        dataset: RubricDataset,
        judges: Sequence[JudgeSpec],
        config: Optional[EvalConfig] = None,
        train: Optional[RubricDataset | Sequence[DatasetItem]] = None,
        on_progress: Optional[Callable[[int, int], None]] = None,
    ):
        if not judges:
            raise ValueError("at least one judge is required")
        names = [j.name for j in judges]
        if len(set(names)) != len(names):
            raise ValueError("judge names must be unique")
        problems = validate_rubric(dataset.rubric)
        if problems:
            raise ValueError("invalid rubric: " + "; ".join(problems))
        self.dataset = dataset
        self.rubric: Rubric = dataset.rubric
        self.judges = list(judges)
        self.config = config or EvalConfig()
        self.train = list(train.items if isinstance(train, RubricDataset) else (train or []))
        self.on_progress = on_progress
        self._backends = {j.name: self._make_backend(j) for j in self.judges}

    @staticmethod
    def _make_backend(judge: JudgeSpec):
        backend = judge.backend if judge.backend is not None else HTTPBackend()
        if judge.config.cache_enabled:
            backend = CachedBackend(backend, ResponseCache(judge.config.cache_dir, judge.config.cache_ttl))
        return backend

    def grader_snapshot(self) -> dict:
        return {
            "rubric": self.rubric.to_dict(),
            "task_prompt": self.dataset.task_prompt,
            "judges": [{"name": j.name, "weight": j.weight, "config": j.config.to_dict()} for j in self.judges],
            "eval": self.config.scoring_snapshot(),
            "dataset_fingerprint": _fingerprint(self.dataset.items),
            "train_fingerprint": _fingerprint(self.train),
        }

    # -- few-shot ------------------------------------------------------------

    def _exemplars(self) -> list[list[Exemplar]]:
        fs = self.config.few_shot
        if fs is None or fs.n_examples == 0 or not self.train:
            return [[] for _ in self.rubric.criteria]
        return [sample_few_shot(self.train, j, c, fs) for j, c in enumerate(self.rubric.criteria)]

    # -- one item --------------------------------------------------------------

    async def _evaluate_item(self, item: DatasetItem, exemplars: list[list[Exemplar]], limiter: ProviderLimiter):
        t0 = time.perf_counter()
        cfg = self.config
        include_reason = bool(cfg.few_shot and cfg.few_shot.include_reason)
        blocks = [
            render_exemplars([e for e in ex if e.submission != item.submission], include_reason) or None
            for ex in exemplars
        ]
        jobs = []
        for j, criterion in enumerate(self.rubric.criteria):
            for judge in self.judges:
                jobs.append(
                    judge_criterion(
                        self._backends[judge.name],
                        judge.config,
                        criterion,
                        item.submission,
                        self.dataset.task_prompt,
                        blocks[j],
                        cfg.master_seed,
                        item.item_id,
                        judge.name,
                        limiter,
                    )
                )
        results: list[tuple[Vote, JudgeBackendResult]] = await asyncio.gather(*jobs)

        n_judges = len(self.judges)
        reports = []
        values = []
        errors = []
        per_criterion_verdicts = []
        for j, criterion in enumerate(self.rubric.criteria):
            chunk = results[j * n_judges : (j + 1) * n_judges]
            votes = [v for v, _ in chunk]
            weighted = [(v.verdict, judge.weight) for v, judge in zip(votes, self.judges)]
            value = None
            if criterion.is_binary:
                verdict = aggregate_binary_votes(weighted, cfg.aggregation_strategy)
                strategy = cfg.aggregation_strategy
            else:
                outcome = aggregate_choice_votes(criterion, weighted, cfg.choice_aggregation)
                verdict, value = outcome.verdict, outcome.value
                strategy = cfg.choice_aggregation
            agreeing = next((v for v in votes if v.verdict == verdict), None)
            if agreeing is not None:
                reason = agreeing.reason
            else:
                tally = "; ".join(f"{v.judge_name}: {v.verdict.label_for(criterion)}" for v in votes)
                reason = f"{strategy.value} of {len(votes)} votes ({tally})"
            reports.append(CriterionReport(criterion.id, verdict, reason, tuple(votes), value))
            values.append(value)
            per_criterion_verdicts.append([v.verdict for v in votes])
            errors.extend(f"{criterion.id}/{v.judge_name}: {v.error}" for v in votes if v.error)

        verdicts = [r.verdict for r in reports]
        try:
            score = aggregate_score(self.rubric, verdicts, cfg.cannot_assess_strategy, values)
        except UndefinedScoreError as exc:
            score = None
            errors.append(f"score: {exc}")
        return EnsembleEvaluationReport(
            item_id=item.item_id,
            reports=tuple(reports),
            score=score,
            mean_agreement=mean_agreement(per_criterion_verdicts),
            total_cost=sum(r.cost for _, r in results),
            total_tokens=sum(r.total_tokens for _, r in results),
            duration_seconds=time.perf_counter() - t0,
            errors=tuple(errors),
        )

    # -- run -------------------------------------------------------------------

    def _prepare_dir(self) -> tuple[Path, Optional[dict]]:
        cfg = self.config
        root = Path(cfg.experiments_dir)
        try:
            root.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise RunAbortError(f"cannot create {root}: {exc}") from exc
        if cfg.experiment_name is None:
            cfg.experiment_name = experiment_name(root)
        exp = root / cfg.experiment_name
        manifest_path = exp / MANIFEST
        existing = None
        if manifest_path.exists():
            if not cfg.resume:
                raise RunAbortError(f"{exp} already holds an experiment; set resume=True to continue it")
            existing = json.loads(manifest_path.read_text())
        elif cfg.resume and exp.exists() and any(exp.iterdir()):
            raise ResumeError(f"{exp}: no manifest")
        try:
            exp.mkdir(parents=True, exist_ok=True)
            probe = exp / ".write-probe"
            probe.write_text("")
            probe.unlink()
        except OSError as exc:
            raise RunAbortError(f"experiment dir {exp} is not writable: {exc}") from exc
        return exp, existing

    def _manifest(self, status: str, records: Sequence[dict], created_at: float) -> dict:
        durations = [r["duration_seconds"] for r in records]
        return {
            "experiment_name": self.config.experiment_name,
            "master_seed": self.config.master_seed,
            "status": status,
            "n_items": len(self.dataset),
            "n_completed": len(records),
            "total_cost": sum(r["cost"] for r in records),
            "total_tokens": sum(r["tokens"] for r in records),
            "timing": asdict(timing_stats(durations)) if durations else None,
            "grader": self.grader_snapshot(),
            "created_at": created_at,
            "updated_at": time.time(),
        }

    async def run(self, stop_after: Optional[int] = None) -> RunResult:
        """Evaluate every pending item; ``stop_after`` caps how many new items are attempted."""
        exp, existing = self._prepare_dir()
        snapshot = self.grader_snapshot()
        if existing is not None and existing["grader"] != snapshot:
            diff = sorted(k for k in snapshot if existing["grader"].get(k) != snapshot[k])
            raise ResumeError(f"configuration differs from the saved experiment in: {', '.join(diff)}")
        created_at = existing["created_at"] if existing else time.time()

        items_path = exp / ITEMS
        done = read_items(items_path)
        if items_path.exists():
            # drop any torn tail left by a crash
            _atomic_write(items_path, "".join(json.dumps(r, sort_keys=True) + "\n" for r in done))
        done_ids = {r["item_id"] for r in done}
        _atomic_write(exp / MANIFEST, json.dumps(self._manifest("running", done, created_at), indent=2, sort_keys=True))

        pending = [it for it in self.dataset.items if it.item_id not in done_ids]
        if stop_after is not None:
            pending = pending[:stop_after]
        exemplars = self._exemplars()
        limiter = ProviderLimiter([j.config for j in self.judges], self.config.max_in_flight)
        item_gate = asyncio.Semaphore(self.config.max_concurrent_items)
        calls_before = {name: getattr(b, "call_count", None) for name, b in self._backends.items()}

        finished: dict[int, EnsembleEvaluationReport] = {}
        next_to_write = 0
        write_lock = asyncio.Lock()
        new_records: list[dict] = []
        total = len(self.dataset)
        session = {"cost": 0.0}

        async def worker(pos: int, item: DatasetItem):
            nonlocal next_to_write
            async with item_gate:
                report = await self._evaluate_item(item, exemplars, limiter)
            async with write_lock:
                finished[pos] = report
                session["cost"] += report.total_cost
                with open(items_path, "a") as fh:
                    while next_to_write in finished:
                        rec = finished[next_to_write].to_dict()
                        fh.write(json.dumps(rec, sort_keys=True) + "\n")
                        new_records.append(rec)
                        next_to_write += 1
                    fh.flush()
                if self.on_progress:
                    self.on_progress(len(done) + len(new_records), total)

        await asyncio.gather(*(worker(i, it) for i, it in enumerate(pending)))

        records = done + new_records
        by_id = {r["item_id"]: r for r in records}
        ordered = [by_id[it.item_id] for it in self.dataset.items if it.item_id in by_id]
        status = "completed" if len(ordered) == total else "incomplete"
        manifest = self._manifest(status, ordered, created_at)
        _atomic_write(exp / MANIFEST, json.dumps(manifest, indent=2, sort_keys=True))
        calls = 0
        for name, b in self._backends.items():
            before = calls_before[name]
            if before is not None:
                calls += b.call_count - before
        return RunResult(
            experiment_dir=exp,
            reports=[EnsembleEvaluationReport.from_dict(r) for r in ordered],
            manifest=manifest,
            new_calls=calls,
            session_call_cost=session["cost"],
        )


def run_eval(
    dataset: RubricDataset,
    judges: Sequence[JudgeSpec],
    config: Optional[EvalConfig] = None,
    train=None,
    on_progress=None,
    stop_after: Optional[int] = None,
) -> RunResult:
    """Synchronous wrapper around :meth:`EvalRunner.run`."""
    runner = EvalRunner(dataset, judges, config, train, on_progress)
    return asyncio.run(runner.run(stop_after=stop_after))


def load_manifest(experiment_dir: str | Path) -> dict:
    path = Path(experiment_dir) / MANIFEST
    if not path.exists():
        raise ResumeError(f"{experiment_dir}: no manifest")
    return json.loads(path.read_text())


def resume_run(
    experiment_dir: str | Path,
    dataset: RubricDataset,
    judges: Sequence[JudgeSpec],
    config: Optional[EvalConfig] = None,
    train=None,
    on_progress=None,
    stop_after: Optional[int] = None,
) -> RunResult:
    """Continue an experiment using the seed and settings stored in its manifest.

    A supplied ``config`` must agree with the stored settings; so must the
    rubric, judges and dataset. Completed items are never re-evaluated.
    """
    experiment_dir = Path(experiment_dir)
    manifest = load_manifest(experiment_dir)
    saved = manifest["grader"]["eval"]
    restored = EvalConfig(
        experiment_name=experiment_dir.name,
        experiments_dir=str(experiment_dir.parent),
        resume=True,
        master_seed=saved["master_seed"],
        cannot_assess_strategy=CannotAssessStrategy.parse(saved["cannot_assess_strategy"]),
        aggregation_strategy=saved["aggregation_strategy"],
        choice_aggregation=saved["choice_aggregation"],
        few_shot=FewShotConfig(**saved["few_shot"]) if saved["few_shot"] else None,
    )
    if config is not None:
        if config.scoring_snapshot() != saved:
            raise ResumeError("supplied configuration differs from the saved experiment")
        restored.max_in_flight = config.max_in_flight
        restored.max_concurrent_items = config.max_concurrent_items
    return run_eval(dataset, judges, restored, train, on_progress, stop_after)
