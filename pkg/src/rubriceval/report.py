"""Plain-text metrics report."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Sequence

from .metrics import correlation_label
from .rubric import EnsembleEvaluationReport
from .summary import MetricsSummary

RULE = "=" * 20


@dataclass(frozen=True)
class RunTotals:
    n_items: int
    total_cost: float
    total_tokens: int
    mean_agreement: Optional[float] = None

    @classmethod
    def from_reports(cls, reports: Sequence[EnsembleEvaluationReport]) -> "RunTotals":
        agreements = [r.mean_agreement for r in reports if r.mean_agreement is not None]
        return cls(
            n_items=len(reports),
            total_cost=sum(r.total_cost for r in reports),
            total_tokens=sum(r.total_tokens for r in reports),
            mean_agreement=sum(agreements) / len(agreements) if agreements else None,
        )

    def to_dict(self) -> dict:
        return asdict(self)


def _pct(x: Optional[float]) -> str:
    return "n/a" if x is None else f"{100 * x:.1f}%"


def _num(x: Optional[float], digits: int) -> str:
    return "n/a" if x is None else f"{x:.{digits}f}"


def format_tokens(n: int) -> str:
    if n >= 1_000_000:
        return f"{n / 1_000_000:.1f}M"
    if n >= 1000:
        return f"{round(n / 1000)}K"
    return str(n)


def cost_line(totals: RunTotals) -> str:
    return f"Total Cost: ${totals.total_cost:.3f} ({totals.n_items} items, {format_tokens(totals.total_tokens)} tokens)"


def render_report(summary: MetricsSummary, totals: RunTotals) -> str:
    lines = [RULE, "METRICS SUMMARY", RULE, f"Items: {summary.n_items}, Criteria: {summary.n_criteria}", ""]

    lines.append("Criterion-Level Metrics:")
    lines.append(f"  Accuracy:   {_pct(summary.accuracy)}")
    if summary.precision is not None or summary.recall is not None:
        lines.append(f"  Precision:  {_num(summary.precision, 2)}")
        lines.append(f"  Recall:     {_num(summary.recall, 2)}")
        lines.append(f"  F1:         {_num(summary.f1, 2)}")
    lines.append(f"  Mean Kappa: {_num(summary.mean_kappa, 3)}")
    if summary.mean_emd is not None:
        lines.append(f"  Mean EMD:   {summary.mean_emd:.3f}")
    if totals.mean_agreement is not None:
        lines.append(f"  Judge Agreement: {totals.mean_agreement:.3f}")
    lines.append("")

    if summary.n_scored:
        lines.append("Score-Level Metrics:")
        lines.append(f"  RMSE:     {summary.rmse:.4f}")
        lines.append(f"  MAE:      {summary.mae:.4f}")
        for name, r in (("Spearman", summary.spearman), ("Kendall", summary.kendall), ("Pearson", summary.pearson)):
            if r is not None:
                lines.append(f"  {name + ':':<9} {r:.4f} ({correlation_label(r)})")
        lines.append("")
        direction = "positive" if summary.mean_bias > 0 else "negative" if summary.mean_bias < 0 else "none"
        lines.append("Bias Analysis:")
        lines.append(f"  Mean Bias:   {summary.mean_bias:+.4f} ({direction})")
        lines.append(f"  Significant: {'Yes' if summary.bias_significant else 'No'}")
        lines.append("")

    if summary.bootstrap:
        lines.append(f"Bootstrap CIs ({round(100 * summary.bootstrap_level)}%):")
        b = summary.bootstrap
        if "accuracy" in b:
            lines.append(f"  Accuracy: [{_pct(b['accuracy'][0])}, {_pct(b['accuracy'][1])}]")
        if "kappa" in b:
            lines.append(f"  Kappa:    [{b['kappa'][0]:.3f}, {b['kappa'][1]:.3f}]")
        if "rmse" in b:
            lines.append(f"  RMSE:     [{b['rmse'][0]:.4f}, {b['rmse'][1]:.4f}]")
        lines.append("")

    lines.append("Per-Criterion Breakdown:")
    header = f"{'Criterion':<20}{'Acc':>9}{'Prec':>9}{'Rec':>9}{'F1':>9}{'Kappa':>9}"
    lines.append(header)
    lines.append("-" * len(header))
    for cm in summary.criteria:
        name = cm.name if len(cm.name) <= 19 else cm.name[:18] + "~"
        lines.append(
            f"{name:<20}{_pct(cm.accuracy):>9}{_num(cm.precision, 2):>9}{_num(cm.recall, 2):>9}"
            f"{_num(cm.f1, 2):>9}{_num(cm.kappa, 3):>9}"
        )
    lines.append("")

    if summary.per_judge:
        lines.append("Per-Judge Breakdown:")
        for name, vals in summary.per_judge.items():
            lines.append(f"  {name}: accuracy {_pct(vals['accuracy'])}, mean kappa {_num(vals['mean_kappa'], 3)}")
        lines.append("")

    lines.append(cost_line(totals))
    return "\n".join(lines) + "\n"
