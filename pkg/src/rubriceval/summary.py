"""Run-level metrics against ground truth (criterion level and score level)."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import metrics as M
from .dataset import RubricDataset
from .rubric import Criterion, EnsembleEvaluationReport, Rubric, ScaleType, Verdict, VerdictKind
from .scoring import SKIP, CannotAssessStrategy, UndefinedScoreError, aggregate_score


@dataclass
class CriterionMetrics:
    criterion_id: str
    name: str
    scale_type: str
    n: int
    accuracy: Optional[float] = None
    precision: Optional[float] = None
    recall: Optional[float] = None
    f1: Optional[float] = None
    kappa: Optional[float] = None
    kappa_weighting: str = "none"
    adjacent_accuracy: Optional[float] = None
    emd: Optional[float] = None
    confusion: Optional[dict] = None


@dataclass
class MetricsSummary:
    n_items: int
    n_criteria: int
    criteria: list[CriterionMetrics]
    accuracy: Optional[float] = None
    precision: Optional[float] = None
    recall: Optional[float] = None
    f1: Optional[float] = None
    mean_kappa: Optional[float] = None
    mean_emd: Optional[float] = None
    n_scored: int = 0
    rmse: Optional[float] = None
    mae: Optional[float] = None
    spearman: Optional[float] = None
    kendall: Optional[float] = None
    pearson: Optional[float] = None
    mean_bias: Optional[float] = None
    bias_significant: Optional[bool] = None
    bias_p_value: Optional[float] = None
    bootstrap: dict[str, list[float]] = field(default_factory=dict)
    bootstrap_level: float = 0.95
    per_judge: dict[str, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _categories(criterion: Criterion) -> list[Verdict]:
    if criterion.is_binary:
        return [Verdict(VerdictKind.MET), Verdict(VerdictKind.UNMET)]
    return [Verdict.choice(i) for i, o in enumerate(criterion.options) if not o.na]


def _pairs(criterion: Criterion, ref: Sequence[Verdict], pred: Sequence[Verdict]):
    cats = set(_categories(criterion))
    return [(r, p) for r, p in zip(ref, pred) if r in cats and p in cats]


def criterion_metrics(criterion: Criterion, ref: Sequence[Verdict], pred: Sequence[Verdict]) -> CriterionMetrics:
    """Agreement statistics for one criterion.

    Pairs where either side is CANNOT_ASSESS or an na option are left out.
    Ordinal criteria get quadratic-weighted kappa, adjacent accuracy and EMD;
    binary criteria treat MET as the positive class; nominal criteria get
    macro-averaged precision/recall/F1.
    """
    cats = _categories(criterion)
    pairs = _pairs(criterion, ref, pred)
    out = CriterionMetrics(criterion.id, criterion.display_name, criterion.scale_type.value, len(pairs))
    if not pairs:
        return out
    m = M.confusion_matrix([r for r, _ in pairs], [p for _, p in pairs], cats)
    out.confusion = {"categories": [c.label_for(criterion) for c in cats], "counts": m.counts.tolist()}
    out.accuracy = M.accuracy(m)
    if criterion.scale_type is ScaleType.BINARY:
        out.precision, out.recall, out.f1 = M.precision_recall_f1(m, positive=0)
    else:
        out.precision, out.recall, out.f1 = M.macro_precision_recall_f1(m)
    try:
        if criterion.scale_type is ScaleType.ORDINAL:
            out.kappa = M.weighted_kappa(m, "quadratic")
            out.kappa_weighting = "quadratic"
        else:
            out.kappa = M.cohen_kappa(m)
            out.kappa_weighting = "unweighted"
    except M.MetricError:
        out.kappa = None
    if criterion.scale_type is ScaleType.ORDINAL:
        out.adjacent_accuracy = M.adjacent_accuracy(m)
        out.emd = M.ordinal_emd(m.reference_marginal, m.predicted_marginal)
    return out


def _pooled(rubric: Rubric, refs, preds):
    """Pooled accuracy over all criteria and pooled binary P/R/F1."""
    correct = total = 0
    binary = np.zeros((2, 2))
    for j, c in enumerate(rubric.criteria):
        pairs = _pairs(c, [r[j] for r in refs], [p[j] for p in preds])
        correct += sum(r == p for r, p in pairs)
        total += len(pairs)
        if c.is_binary and pairs:
            binary += M.confusion_matrix([r for r, _ in pairs], [p for _, p in pairs], _categories(c)).counts
    acc = correct / total if total else None
    if binary.sum():
        prf = M.precision_recall_f1(M.ConfusionMatrix(binary, ("MET", "UNMET")), 0)
    else:
        prf = (None, None, None)
    return acc, prf


def _mean_kappa(rubric: Rubric, refs, preds) -> Optional[float]:
    ks = []
    for j, c in enumerate(rubric.criteria):
        k = criterion_metrics(c, [r[j] for r in refs], [p[j] for p in preds]).kappa
        if k is not None:
            ks.append(k)
    return float(np.mean(ks)) if ks else None


def _reference_score(rubric: Rubric, verdicts, strategy) -> Optional[float]:
    try:
        return aggregate_score(rubric, verdicts, strategy)
    except UndefinedScoreError:
        return None


def compute_metrics(
    reports: Sequence[EnsembleEvaluationReport],
    dataset: RubricDataset,
    strategy: CannotAssessStrategy = SKIP,
    n_bootstrap: int = 1000,
    level: float = 0.95,
    seed: int = 0,
    per_judge: bool = False,
) -> MetricsSummary:
    """Compare evaluation reports with the dataset's ground truth.

    Reports are matched to items by ``item_id``; items without a report are
    ignored. Reference scores come from scoring the ground-truth verdicts
    with the same CANNOT_ASSESS strategy.
    """
    rubric = dataset.rubric
    by_id = {it.item_id: it for it in dataset.items}
    matched = []
    for rep in reports:
        item = by_id.get(rep.item_id)
        if item is None:
            continue
        if item.ground_truth is None:
            raise M.MetricError(f"item {rep.item_id} has no ground truth")
        matched.append((item, rep))
    if not matched:
        raise M.MetricError("no reports match dataset items with ground truth")

    refs = [list(item.ground_truth) for item, _ in matched]
    preds = [rep.verdicts for _, rep in matched]
    per_crit = [criterion_metrics(c, [r[j] for r in refs], [p[j] for p in preds]) for j, c in enumerate(rubric.criteria)]
    acc, (prec, rec, f1) = _pooled(rubric, refs, preds)
    kappas = [cm.kappa for cm in per_crit if cm.kappa is not None]
    emds = [cm.emd for cm in per_crit if cm.emd is not None]
    summary = MetricsSummary(
        n_items=len(matched),
        n_criteria=len(rubric),
        criteria=per_crit,
        accuracy=acc,
        precision=prec,
        recall=rec,
        f1=f1,
        mean_kappa=float(np.mean(kappas)) if kappas else None,
        mean_emd=float(np.mean(emds)) if emds else None,
        bootstrap_level=level,
    )

    score_pairs = []
    for (item, rep), ref in zip(matched, refs):
        r = _reference_score(rubric, ref, strategy)
        if r is not None and rep.score is not None:
            score_pairs.append((r, rep.score))
    summary.n_scored = len(score_pairs)
    if score_pairs:
        ref_s = [a for a, _ in score_pairs]
        pred_s = [b for _, b in score_pairs]
        err = M.score_errors(ref_s, pred_s)
        summary.rmse, summary.mae = err.rmse, err.mae
        summary.mean_bias, summary.bias_significant, summary.bias_p_value = err.mean_bias, err.bias_significant, err.bias_p_value
        corr = M.rank_correlations(ref_s, pred_s)
        summary.spearman, summary.kendall, summary.pearson = corr

    if n_bootstrap > 0:
        idx = np.arange(len(matched))

        def boot_acc(sel):
            return _pooled(rubric, [refs[i] for i in sel], [preds[i] for i in sel])[0]

        def boot_kappa(sel):
            return _mean_kappa(rubric, [refs[i] for i in sel], [preds[i] for i in sel])

        def boot_rmse(sel):
            pairs = [score_pairs[i] for i in sel]
            return M.score_errors([a for a, _ in pairs], [b for _, b in pairs]).rmse

        for name, fn, sample in (
            ("accuracy", boot_acc, idx),
            ("kappa", boot_kappa, idx),
            ("rmse", boot_rmse, np.arange(len(score_pairs))),
        ):
            if len(sample) == 0:
                continue
            ci = M.bootstrap_ci(fn, sample, n_bootstrap, level, seed)
            if ci is not None:
                summary.bootstrap[name] = [ci[0], ci[1]]

    if per_judge:
        judges: list[str] = []
        for _, rep in matched:
            for cr in rep.reports:
                for v in cr.votes:
                    if v.judge_name not in judges:
                        judges.append(v.judge_name)
        for name in judges:
            jpreds = []
            jrefs = []
            for (item, rep), ref in zip(matched, refs):
                row = []
                for cr in rep.reports:
                    vote = next((v for v in cr.votes if v.judge_name == name), None)
                    row.append(vote.verdict if vote else Verdict(VerdictKind.CANNOT_ASSESS))
                jpreds.append(row)
                jrefs.append(ref)
            jacc, _ = _pooled(rubric, jrefs, jpreds)
            summary.per_judge[name] = {"accuracy": jacc, "mean_kappa": _mean_kappa(rubric, jrefs, jpreds)}
    return summary
