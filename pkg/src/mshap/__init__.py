"""Attribution toolkit for two-part (product-of-outputs) models.

Combines per-part SHAP explanations into product-model attributions that keep
local accuracy, verifies them against an exact Shapley enumeration oracle,
scores attribution matrices against each other, and reproduces the alpha
weighting comparison and runtime-scaling studies at desk scale.
"""

from .combine import (
    AlphaMethod,
    MshapExplanation,
    combine,
    compute_alpha,
    distribute_alpha,
    linear_combine,
    linear_combine_explanations,
    linear_combine_mshap,
    mean_product_baseline,
    mshap_prime,
)
from .errors import (
    DenominatorGuardError,
    DimensionError,
    EnumerationLimitError,
    InvalidInputError,
    MshapError,
    ResampleLimitError,
    TableFormatError,
)
from .scoring import (
    ScoreBreakdown,
    ScoreParams,
    beta,
    importance_ranks,
    lambda1,
    lambda2,
    lambda3,
    score_matrices,
)
from .shapley import (
    DEFAULT_ENUM_LIMIT,
    BackgroundSet,
    LocalAccuracyReport,
    ModelFunction,
    SamplingRow,
    ShapExplanation,
    ShapRow,
    additive_model,
    baseline,
    constant_model,
    exact_shapley,
    explain_matrix,
    product_model,
    sampling_explain_matrix,
    sampling_shapley,
    validate_local_accuracy,
)
from .simulation import (
    BenchError,
    BenchRecord,
    CovariateSpec,
    GridOutcome,
    ResponseFunction,
    RESPONSE_FUNCTIONS,
    ScenarioResult,
    ScenarioSpec,
    bench_scaling,
    default_grid,
    derive_seed,
    eval_response,
    gen_covariates,
    grid_table,
    mean_scores_by_method,
    run_grid,
    run_scenario,
    sample_scenario_rows,
    scenario_model,
)
from .tables import (
    ShapTable,
    explanation_to_table,
    fmt17,
    read_shap_table,
    read_value_table,
    write_shap_table,
    write_value_table,
)

__version__ = "0.1.0"

__all__ = [
    "AlphaMethod",
    "BackgroundSet",
    "BenchError",
    "BenchRecord",
    "CovariateSpec",
    "DEFAULT_ENUM_LIMIT",
    "DenominatorGuardError",
    "DimensionError",
    "EnumerationLimitError",
    "GridOutcome",
    "InvalidInputError",
    "LocalAccuracyReport",
    "ModelFunction",
    "MshapError",
    "MshapExplanation",
    "RESPONSE_FUNCTIONS",
    "ResampleLimitError",
    "ResponseFunction",
    "SamplingRow",
    "ScenarioResult",
    "ScenarioSpec",
    "ScoreBreakdown",
    "ScoreParams",
    "ShapExplanation",
    "ShapRow",
    "ShapTable",
    "TableFormatError",
    "additive_model",
    "baseline",
    "bench_scaling",
    "beta",
    "combine",
    "compute_alpha",
    "constant_model",
    "default_grid",
    "derive_seed",
    "distribute_alpha",
    "eval_response",
    "exact_shapley",
    "explain_matrix",
    "explanation_to_table",
    "fmt17",
    "gen_covariates",
    "grid_table",
    "importance_ranks",
    "lambda1",
    "lambda2",
    "lambda3",
    "linear_combine",
    "linear_combine_explanations",
    "linear_combine_mshap",
    "mean_product_baseline",
    "mean_scores_by_method",
    "mshap_prime",
    "product_model",
    "read_shap_table",
    "read_value_table",
    "run_grid",
    "run_scenario",
    "sample_scenario_rows",
    "sampling_explain_matrix",
    "sampling_shapley",
    "scenario_model",
    "score_matrices",
    "validate_local_accuracy",
    "write_shap_table",
    "write_value_table",
]
