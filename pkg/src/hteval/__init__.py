"""Out-of-sample evaluation of heterogeneous treatment effect models.

An unrestricted outcome model is compared with its closest constant-effect
counterpart by nested cross-validation, giving a confidence interval and
h-values for the expected difference in squared prediction error.
"""

__version__ = "0.1.0"

from .data import (
    CovariateDataset,
    Dataset,
    FoldAssignment,
    ModifiedDataset,
    compute_modified_outcomes,
    load_csv,
    shift_outcomes,
    split_folds,
)
from .diagnostics import h_value_distribution, partial_dependence
from .estimators import HTEEvaluator, RestrictedRegressor, UnrestrictedRegressor
from .learners import (
    PRESETS,
    FittedModel,
    LearnerSpec,
    Tuning,
    fit_baseline,
    fit_unrestricted,
    predict_outcome,
    resolve_learner,
)
from .losses import LossRecord, diff_sq_loss, evaluate_pair, modified_diff_sq_loss
from .nested_cv import (
    EvaluationReport,
    NcvConfig,
    NcvResult,
    confidence_interval,
    h_value,
    one_sided_h_value,
    run_evaluation,
    run_ncv,
)
from .restricted import (
    RestrictedModel,
    TauSearch,
    closed_form_tau_linear_scalar,
    estimate_tau_star,
    fit_restricted,
    restricted_sse,
    restricted_tau_mo,
)
from .simulation import CoverageReport, GeneratorSpec, coverage_study, generate, oracle_estimand

__all__ = [
    "CoverageReport",
    "CovariateDataset",
    "Dataset",
    "EvaluationReport",
    "FittedModel",
    "FoldAssignment",
    "GeneratorSpec",
    "HTEEvaluator",
    "LearnerSpec",
    "LossRecord",
    "ModifiedDataset",
    "NcvConfig",
    "NcvResult",
    "PRESETS",
    "RestrictedModel",
    "RestrictedRegressor",
    "TauSearch",
    "Tuning",
    "UnrestrictedRegressor",
    "closed_form_tau_linear_scalar",
    "compute_modified_outcomes",
    "confidence_interval",
    "coverage_study",
    "diff_sq_loss",
    "estimate_tau_star",
    "evaluate_pair",
    "fit_baseline",
    "fit_restricted",
    "fit_unrestricted",
    "generate",
    "h_value",
    "h_value_distribution",
    "load_csv",
    "modified_diff_sq_loss",
    "one_sided_h_value",
    "oracle_estimand",
    "partial_dependence",
    "predict_outcome",
    "resolve_learner",
    "restricted_sse",
    "restricted_tau_mo",
    "run_evaluation",
    "run_ncv",
    "shift_outcomes",
    "split_folds",
]
