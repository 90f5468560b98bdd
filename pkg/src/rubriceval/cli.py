"""Command line entry point: ``rubriceval run`` and ``rubriceval metrics``.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .backends import ScriptedBackend
from .calibration import FewShotConfig
from .dataset import DatasetError, RubricDataset, load_dataset
from .ensemble import AggregationStrategy, JudgeSpec
from .judging import JudgeConfig
from .metrics import MetricError
from .report import RunTotals, render_report
from .rubric import EnsembleEvaluationReport, Rubric, RubricError
from .runner import ITEMS, EvalConfig, ResumeError, RunAbortError, load_manifest, read_items, resume_run, run_eval
from .scoring import CannotAssessStrategy
from .summary import compute_metrics


class CLIError(RuntimeError):
    pass


def load_judges(path: str | Path, shuffle: bool = True) -> list[JudgeSpec]:
    """Judge file: a JSON list (or ``{"judges": [...]}``) of judge entries.

    Each entry has ``name``, optional ``weight``, any :class:`JudgeConfig`
    field, and optionally ``scripted``: a JSONL response file (relative to
    the judge file) that replaces the HTTP backend.
    """
    path = Path(path)
    data = json.loads(path.read_text())
    entries = data["judges"] if isinstance(data, dict) else data
    judges = []
    for i, entry in enumerate(entries):
        cfg = JudgeConfig.from_dict(entry)
        cfg.shuffle_options = cfg.shuffle_options and shuffle
        backend = None
        if entry.get("scripted"):
            backend = ScriptedBackend.from_jsonl(path.parent / entry["scripted"])
        judges.append(JudgeSpec(entry.get("name", f"judge{i}"), cfg, float(entry.get("weight", 1.0)), backend))
    return judges


def _dataset(path: str, rubric_path: Optional[str]) -> RubricDataset:
    if rubric_path is None:
        return load_dataset(path)
    data = json.loads(Path(path).read_text())
    data["rubric"] = Rubric.load(rubric_path).to_dict()
    return RubricDataset.from_dict(data, name=Path(path).stem)


def _progress(done: int, total: int) -> None:
    print(f"\r  Evaluating {done}/{total}", end="", flush=True)


def cmd_run(args: argparse.Namespace) -> int:
    dataset = _dataset(args.dataset, args.rubric)
    judges = load_judges(args.judges, shuffle=not args.no_shuffle)
    train = None
    eval_items = dataset
    few_shot = None
    if args.few_shot:
        few_shot = FewShotConfig(n_examples=args.few_shot, seed=args.seed)
        split = dataset.split_train_test(
            train_fraction=args.train_fraction, stratify=dataset.has_ground_truth, seed=args.seed
        )
        train, eval_items = split.train, split.test

    if args.resume:
        exp_dir = Path(args.out) / args.name if args.name else Path(args.out)
        print(f"Resuming {exp_dir}")
        result = resume_run(exp_dir, eval_items, judges, train=train, on_progress=_progress)
    else:
        config = EvalConfig(
            experiment_name=args.name,
            experiments_dir=args.out,
            master_seed=args.seed,
            cannot_assess_strategy=CannotAssessStrategy.parse(args.ca_strategy),
            aggregation_strategy=args.strategy,
            choice_aggregation=args.choice_strategy,
            few_shot=few_shot,
        )
        print(f"Grading {len(eval_items)} items with {len(judges)} judge(s)...")
        result = run_eval(eval_items, judges, config, train=train, on_progress=_progress)
    m = result.manifest
    print(f"\r  Evaluating {m['n_completed']}/{m['n_items']}")
    print(f"Experiment saved to: {result.experiment_dir}")
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    exp = Path(args.experiment)
    manifest = load_manifest(exp)
    dataset = load_dataset(args.dataset)
    if not dataset.has_ground_truth:
        raise CLIError(f"{args.dataset}: dataset has no ground truth")
    reports = [EnsembleEvaluationReport.from_dict(r) for r in read_items(exp / ITEMS)]
    strategy = CannotAssessStrategy.parse(manifest["grader"]["eval"]["cannot_assess_strategy"])
    summary = compute_metrics(
        reports, dataset, strategy, n_bootstrap=args.bootstrap, seed=args.seed, per_judge=args.per_judge
    )
    totals = RunTotals.from_reports(reports)
    print(render_report(summary, totals), end="")
    out = Path(args.out) if args.out else exp / "metrics.json"
    out.write_text(json.dumps({"metrics": summary.to_dict(), "run": totals.to_dict()}, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rubriceval", description="Rubric-based LLM evaluation")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="grade a dataset")
    run.add_argument("--dataset", required=True)
    run.add_argument("--rubric", help="rubric JSON replacing the dataset's rubric")
    run.add_argument("--judges", required=True, help="judge configuration JSON")
    run.add_argument("--out", default="experiments", help="experiments directory")
    run.add_argument("--name", help="experiment name (random if omitted)")
    run.add_argument("--seed", type=int, default=42)
    run.add_argument("--resume", action="store_true")
    run.add_argument("--few-shot", type=int, default=0, metavar="N")
    run.add_argument("--train-fraction", type=float, default=0.2)
    run.add_argument("--no-shuffle", action="store_true")
    run.add_argument("--strategy", default="majority", choices=["majority", "weighted", "unanimous", "any"])
    run.add_argument("--choice-strategy", default="mean", choices=["majority", "weighted", "mean"])
    run.add_argument("--ca-strategy", default="skip", help="skip | zero | fail | partial[:credit]")
    run.set_defaults(func=cmd_run)

    met = sub.add_parser("metrics", help="compare an experiment with ground truth")
    met.add_argument("--experiment", required=True)
    met.add_argument("--dataset", required=True)
    met.add_argument("--bootstrap", type=int, default=1000, help="resamples; 0 disables CIs")
    met.add_argument("--per-judge", action="store_true")
    met.add_argument("--seed", type=int, default=0)
    met.add_argument("--out", help="metrics JSON path (default: <experiment>/metrics.json)")
    met.set_defaults(func=cmd_metrics)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        try:
            CannotAssessStrategy.parse(args.ca_strategy)
        except ValueError:
            parser.error(f"invalid --ca-strategy {args.ca_strategy!r}")
    try:
        return args.func(args)
    except (CLIError, ResumeError, RunAbortError, DatasetError, RubricError, MetricError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
