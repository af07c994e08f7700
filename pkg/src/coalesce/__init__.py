"""Conditional Shapley values for tabular models, estimated in one batch.

Instead of refitting a restricted regression for every feature coalition,
all restricted fits are obtained simultaneously from SPD systems that share
one Gram matrix, each penalized on the columns of its excluded features; an
exact per-coalition least-squares oracle is included for verification and
benchmarking.
"""

from .coalitions import (
    DEFAULT_ANCHOR_WEIGHT,
    DEFAULT_EXHAUSTIVE_CAP,
    Coalition,
    CoalitionPlan,
    build_Z,
    enumerate_all,
    sample_coalitions,
    shapley_kernel_weight,
)
from .engine import ShapleyResult, explain_batch, solve_kernel_shap
from .errors import (
    CoalesceError,
    DuplicateColumnError,
    FactorizationError,
    MissingCellError,
    MissingFeatureError,
    PlanDeficiencyError,
    PlanSizeError,
    TableFormatError,
    UnknownLevelError,
)
from .oracle import OracleFit, explain_exact, fit_plan, fit_subset_ols
from .solver import (
    DEFAULT_CHUNK_SIZE,
    DEFAULT_KAPPA_MULTIPLIER,
    KAPPA_SWEEP_MULTIPLIERS,
    CoefficientSet,
    build_mask,
    constraint_matrix,
    contributions,
    kappa_default,
    solve_coalition,
    solve_plan_chunked,
)
from .tabular import (
    DesignMatrix,
    Feature,
    FeatureSchema,
    GramSystem,
    build_design,
    column_ranges_for,
    compute_gram,
    design_width,
    encode_row,
    load_predictions,
    load_table,
)

__version__ = "0.1.0"

__all__ = [
    "Coalition",
    "CoalitionPlan",
    "CoalesceError",
    "CoefficientSet",
    "DEFAULT_ANCHOR_WEIGHT",
    "DEFAULT_CHUNK_SIZE",
    "DEFAULT_EXHAUSTIVE_CAP",
    "DEFAULT_KAPPA_MULTIPLIER",
    "DesignMatrix",
    "DuplicateColumnError",
    "FactorizationError",
    "Feature",
    "FeatureSchema",
    "GramSystem",
    "KAPPA_SWEEP_MULTIPLIERS",
    "MissingCellError",
    "MissingFeatureError",
    "OracleFit",
    "PlanDeficiencyError",
    "PlanSizeError",
    "ShapleyResult",
    "TableFormatError",
    "UnknownLevelError",
    "build_design",
    "build_mask",
    "build_Z",
    "column_ranges_for",
    "compute_gram",
    "constraint_matrix",
    "contributions",
    "design_width",
    "encode_row",
    "enumerate_all",
    "explain_batch",
    "explain_exact",
    "fit_plan",
    "fit_subset_ols",
    "kappa_default",
    "load_predictions",
    "load_table",
    "sample_coalitions",
    "shapley_kernel_weight",
    "solve_coalition",
    "solve_kernel_shap",
    "solve_plan_chunked",
]
