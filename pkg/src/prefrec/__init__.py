"""Preference-guided actionable recourse for binary tabular classifiers."""

from .baselines import (
    GrowingSpheresConfig,
    GrowingSpheresRecourse,
    WachterConfig,
    WachterRecourse,
    growing_spheres,
    wachter,
)
from .cost import (
    CostConfig,
    actionable_cost,
    fractional_costs,
    shift_cost,
    step_cost,
    total_cost,
)
from .data import (
    Dataset,
    DatasetSchema,
    FeatureSpec,
    generate_synthetic,
    inverse_min_max_scale,
    load_csv,
    load_schema,
    min_max_scale,
    save_csv,
    save_schema,
)
from .engine import (
    EngineConfig,
    PreferenceGuidedRecourse,
    RecourseResult,
    StepRecord,
    Trajectory,
    cost_correction,
    generate_recourse,
    run_stage1,
    sample_indicators,
    sampling_weights,
    step_direction,
)
from .metrics import (
    MetricsReport,
    constraint_violations,
    evaluate,
    grouped,
    expected_cost_bound_check,
    prmse,
    proximity,
    redundancy,
    sparsity,
    success_rate,
)
from .models import (
    LogisticClassifier,
    MlpClassifier,
    Predictor,
    accuracy,
    load_model,
    save_model,
    train_logistic,
    train_mlp,
)
from .preferences import (
    PreferenceProfile,
    default_profile,
    renormalize_gamma,
    validate_profile,
)
from .quantiles import QuantileTable, build_quantile_table
from .validation import (
    DataError,
    PositiveInstanceError,
    ProfileError,
    SchemaError,
    TrainingError,
)

__version__ = "0.1.0"
