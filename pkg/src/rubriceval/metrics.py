"""Agreement, correlation and significance statistics for judge outputs.

Everything works on plain sequences or numpy arrays. Statistics that are
undefined for the input (zero variance, empty support) come back as None
rather than 0.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Hashable, NamedTuple, Optional, Sequence

import numpy as np
from scipy import stats


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with rows = reference labels and columns = predicted labels."""

    counts: np.ndarray
    categories: tuple

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=float)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise MetricError(f"confusion matrix must be square, got shape {counts.shape}")
        if (counts < 0).any():
            raise MetricError("confusion matrix counts must be non-negative")
        cats = tuple(self.categories) if self.categories is not None else tuple(range(len(counts)))
        if len(cats) != len(counts):
            raise MetricError("category count does not match matrix size")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "categories", cats)

    @classmethod
    def from_counts(cls, counts, categories: Optional[Sequence] = None) -> "ConfusionMatrix":
        return cls(np.asarray(counts, dtype=float), tuple(categories) if categories is not None else None)

    @property
    def k(self) -> int:
        return len(self.categories)

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    @property
    def reference_marginal(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def predicted_marginal(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([""] + [str(c) for c in self.categories])
        for cat, row in zip(self.categories, self.counts):
            writer.writerow([str(cat)] + [f"{v:g}" for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ConfusionMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        header = rows[0][1:]
        counts = [[float(v) for v in row[1:]] for row in rows[1:] if row]
        row_labels = [row[0] for row in rows[1:] if row]
        if row_labels != header:
            raise MetricError("row and column categories differ")
        return cls(np.array(counts), tuple(header))

    def to_dict(self) -> dict:
        return {"categories": [str(c) for c in self.categories], "counts": self.counts.tolist()}


def confusion_matrix(reference: Sequence[Hashable], predicted: Sequence[Hashable], categories: Sequence[Hashable]) -> ConfusionMatrix:
    if len(reference) != len(predicted):
        raise MetricError(f"length mismatch: {len(reference)} reference vs {len(predicted)} predicted")
    index = {c: i for i, c in enumerate(categories)}
    counts = np.zeros((len(categories), len(categories)))
    for r, p in zip(reference, predicted):
        if r not in index or p not in index:
            raise MetricError(f"unknown label {r if r not in index else p!r}")
        counts[index[r], index[p]] += 1
    return ConfusionMatrix(counts, tuple(categories))


def accuracy(m: ConfusionMatrix) -> float:
    if m.total == 0:
        raise MetricError("empty confusion matrix")
    return float(np.trace(m.counts) / m.total)


def cohen_kappa(m: ConfusionMatrix) -> float:
    """Unweighted kappa (p_o - p_e) / (1 - p_e) with marginal-product chance agreement."""
    n = m.total
    if n == 0:
        raise MetricError("empty confusion matrix")
    p_o = np.trace(m.counts) / n
    p_e = float(m.reference_marginal @ m.predicted_marginal) / n**2
    if math.isclose(p_e, 1.0):
        if math.isclose(p_o, 1.0):
            return 0.0
        raise MetricError("degenerate marginals with disagreement")
    return float((p_o - p_e) / (1 - p_e))


def weighted_kappa(m: ConfusionMatrix, weighting: str = "quadratic") -> float:
    """Weighted kappa with disagreement weights (i-j)^p / (k-1)^p, p=2 (quadratic) or 1 (linear)."""
    if m.k < 2:
        raise MetricError("weighted kappa needs at least two ordered categories")
    if m.total == 0:
        raise MetricError("empty confusion matrix")
    power = {"quadratic": 2, "linear": 1}[weighting]
    i, j = np.indices(m.counts.shape)
    w = np.abs(i - j) ** power / (m.k - 1) ** power
    expected = np.outer(m.reference_marginal, m.predicted_marginal) / m.total
    observed_d = float((w * m.counts).sum())
    expected_d = float((w * expected).sum())
    if expected_d == 0:
        if observed_d == 0:
            return 0.0
        raise MetricError("zero expected disagreement with observed disagreement")
    return 1.0 - observed_d / expected_d


def adjacent_accuracy(m: ConfusionMatrix) -> float:
    """Share of pairs at most one ordinal step apart."""
    if m.total == 0:
        raise MetricError("empty confusion matrix")
    i, j = np.indices(m.counts.shape)
    return float(m.counts[np.abs(i - j) <= 1].sum() / m.total)


def precision_recall_f1(m: ConfusionMatrix, positive: int = 0) -> tuple[Optional[float], Optional[float], Optional[float]]:
    """Precision, recall and F1 for one category treated as the positive class."""
    tp = m.counts[positive, positive]
    predicted_pos = m.predicted_marginal[positive]
    actual_pos = m.reference_marginal[positive]
    precision = float(tp / predicted_pos) if predicted_pos else None
    recall = float(tp / actual_pos) if actual_pos else None
    if precision is None or recall is None:
        f1 = None
    elif precision + recall == 0:
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def macro_precision_recall_f1(m: ConfusionMatrix) -> tuple[Optional[float], Optional[float], Optional[float]]:
    per_class = [precision_recall_f1(m, i) for i in range(m.k)]
    out = []
    for col in zip(*per_class):
        vals = [v for v in col if v is not None]
        out.append(float(np.mean(vals)) if vals else None)
    return tuple(out)


def ordinal_emd(reference_marginal: Sequence[float], predicted_marginal: Sequence[float]) -> float:
    """Earth mover's distance between two distributions on the same ordered support.

    Inputs may be raw counts; each is normalized to sum to 1. The result is
    in scale-step units: sum over j < k of |CDF_ref(j) - CDF_pred(j)|.
    """
    ref = np.asarray(reference_marginal, dtype=float)
    pred = np.asarray(predicted_marginal, dtype=float)
    if ref.shape != pred.shape:
        raise MetricError(f"category mismatch: {ref.shape} vs {pred.shape}")
    if ref.sum() <= 0 or pred.sum() <= 0:
        raise MetricError("distributions must have positive mass")
    diff = np.cumsum(ref / ref.sum()) - np.cumsum(pred / pred.sum())
    return float(np.abs(diff[:-1]).sum())


class Correlations(NamedTuple):
    spearman: Optional[float]
    kendall: Optional[float]
    pearson: Optional[float]


def rank_correlations(x: Sequence[float], y: Sequence[float]) -> Correlations:
    """Spearman (average ranks), Kendall tau-b and Pearson; None under zero variance."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise MetricError("length mismatch")
    if len(x) < 2 or np.ptp(x) == 0 or np.ptp(y) == 0:
        return Correlations(None, None, None)
    return Correlations(
        float(stats.spearmanr(x, y).statistic),
        float(stats.kendalltau(x, y, variant="b").statistic),
        float(stats.pearsonr(x, y).statistic),
    )


class ScoreErrors(NamedTuple):
    rmse: float
    mae: float
    mean_bias: float
    bias_significant: bool
    bias_p_value: Optional[float]


def score_errors(reference: Sequence[float], predicted: Sequence[float], alpha: float = 0.05) -> ScoreErrors:
    """RMSE, MAE and mean bias (predicted - reference) with a one-sample t-test.

    When residuals have zero spread the t statistic is undefined; the bias
    then counts as significant iff it is nonzero and n >= 2. Spread below
    1e-12 is treated as zero so float noise on a constant shift is ignored.
    """
    ref = np.asarray(reference, dtype=float)
    pred = np.asarray(predicted, dtype=float)
    if len(ref) != len(pred) or len(ref) == 0:
        raise MetricError("need equal, non-empty score vectors")
    resid = pred - ref
    rmse = float(np.sqrt(np.mean(resid**2)))
    mae = float(np.mean(np.abs(resid)))
    bias = float(np.mean(resid))
    if len(resid) < 2:
        return ScoreErrors(rmse, mae, bias, False, None)
    if np.ptp(resid) <= 1e-12:
        return ScoreErrors(rmse, mae, bias, abs(bias) > 1e-12, None)
    p = float(stats.ttest_1samp(resid, 0.0).pvalue)
    return ScoreErrors(rmse, mae, bias, p < alpha, p)


def icc_2_1(ratings) -> float:
    """ICC(2,1): two-way random effects, absolute agreement, single rater."""
    x = np.asarray(ratings, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 2:
        raise MetricError("need an items x raters matrix with at least 2 of each")
    if np.isnan(x).any():
        raise MetricError("missing ratings")
    n, k = x.shape
    grand = x.mean()
    ss_rows = k * ((x.mean(axis=1) - grand) ** 2).sum()
    ss_cols = n * ((x.mean(axis=0) - grand) ** 2).sum()
    ss_err = ((x - grand) ** 2).sum() - ss_rows - ss_cols
    ms_r = ss_rows / (n - 1)
    ms_c = ss_cols / (k - 1)
    ms_e = ss_err / ((n - 1) * (k - 1))
    denom = ms_r + (k - 1) * ms_e + k * (ms_c - ms_e) / n
    if denom == 0:
        raise MetricError("zero variance: ICC undefined")
    return float((ms_r - ms_e) / denom)


def bootstrap_ci(
    statistic: Callable[[Sequence], Optional[float]],
    sample: Sequence,
    n_resamples: int = 1000,
    level: float = 0.95,
    seed: int = 0,
) -> Optional[tuple[float, float]]:
    """Percentile bootstrap interval.

    Resample indices are drawn up front from ``seed`` so the interval does
    not depend on evaluation order. Resamples where the statistic is
    undefined (None or MetricError) are dropped; None if all are.
    """
    n = len(sample)
    if n == 0:
        raise MetricError("empty sample")
    rng = np.random.default_rng(seed)
    indices = rng.integers(0, n, size=(n_resamples, n))
    as_array = isinstance(sample, np.ndarray)
    values = []
    for idx in indices:
        resample = sample[idx] if as_array else [sample[i] for i in idx]
        try:
            v = statistic(resample)
        except (MetricError, ZeroDivisionError):
            continue
        if v is not None and not math.isnan(v):
            values.append(v)
    if not values:
        return None
    alpha = 1 - level
    lo, hi = np.percentile(values, [100 * alpha / 2, 100 * (1 - alpha / 2)])
    return float(lo), float(hi)


def mcnemar_exact(b: int, c: int) -> float:
    """Two-sided exact McNemar p-value for b improved vs c degraded pairs."""
    n = b + c
    if n == 0:
        return 1.0
    tail = sum(math.comb(n, i) for i in range(min(b, c) + 1)) / 2**n
    return min(1.0, 2 * tail)


class PermutationResult(NamedTuple):
    p_value: float
    mean_diff: float
    cohens_d: Optional[float]


def paired_permutation_test(diffs: Sequence[float], n_permutations: int = 9999, seed: int = 0) -> PermutationResult:
    """Two-sided sign-flip permutation test on paired differences."""
    d = np.asarray(diffs, dtype=float)
    if len(d) < 2:
        raise MetricError("need at least two paired differences")
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    cohens_d = mean / sd if sd > 0 else None
    if np.all(d == 0):
        return PermutationResult(1.0, 0.0, None)
    rng = np.random.default_rng(seed)
    observed = abs(mean)
    hits = 0
    chunk = 4096
    done = 0
    while done < n_permutations:
        m = min(chunk, n_permutations - done)
        signs = rng.choice(np.array([-1.0, 1.0]), size=(m, len(d)))
        hits += int((np.abs((signs * d).mean(axis=1)) >= observed - 1e-12).sum())
        done += m
    return PermutationResult((1 + hits) / (n_permutations + 1), mean, cohens_d)


def correlation_label(r: Optional[float]) -> str:
    if r is None:
        return "undefined"
    a = abs(r)
    if a < 0.1:
        return "negligible"
    strength = "weak" if a < 0.4 else "moderate" if a < 0.7 else "strong" if a < 0.9 else "very strong"
    return f"{strength} {'positive' if r > 0 else 'negative'}"
