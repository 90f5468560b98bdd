"""Rubric-based evaluation of free-text submissions with LLM judges."""

from .backends import CachedBackend, HTTPBackend, ResponseCache, ScriptedBackend, compute_cache_key
from .calibration import DatasetSplit, Exemplar, FewShotConfig, render_exemplars, sample_few_shot, split_train_test
from .dataset import DatasetItem, RubricDataset, dataset_stats, encode_ground_truth, load_dataset, save_dataset
from .ensemble import (
    AggregationStrategy,
    JudgeSpec,
    aggregate_binary_votes,
    aggregate_choice_votes,
    mean_agreement,
)
from .judging import (
    JudgeBackendResult,
    JudgeConfig,
    PromptBundle,
    build_binary_prompt,
    build_choice_prompt,
    derive_item_seed,
    judge_criterion,
    parse_binary_response,
    parse_choice_response,
    shuffle_options,
)
from .metrics import (
    ConfusionMatrix,
    adjacent_accuracy,
    bootstrap_ci,
    cohen_kappa,
    confusion_matrix,
    icc_2_1,
    mcnemar_exact,
    ordinal_emd,
    paired_permutation_test,
    rank_correlations,
    score_errors,
    weighted_kappa,
)
from .report import RunTotals, render_report
from .rubric import (
    CANNOT_ASSESS,
    MET,
    UNMET,
    Criterion,
    CriterionOption,
    CriterionReport,
    EnsembleEvaluationReport,
    Rubric,
    ScaleType,
    Verdict,
    Vote,
    total_positive_weight,
    validate_rubric,
)
from .runner import EvalConfig, EvalRunner, RunResult, TimingStats, resume_run, run_eval, timing_stats
from .scoring import (
    FAIL,
    PARTIAL,
    SKIP,
    ZERO,
    CannotAssessStrategy,
    UndefinedScoreError,
    aggregate_score,
    resolve_cannot_assess,
    verdict_value,
)
from .summary import MetricsSummary, compute_metrics

__version__ = "0.1.0"
