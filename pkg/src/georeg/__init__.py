"""georeg: feature-space geometry of over-parameterized least squares.

Fit minimum-norm/ridge linear models over identity, random-linear, or
random-nonlinear feature families and analyze them through two projection
operators: P_l on the training labels and P_f on the input features.  The
SVD of P_f carries per-mode angles that classify the operator (orthogonal,
oblique, or "noisy" oblique), explain the double-descent test-error peak as
a geometric variance divergence, and split input perturbations into
adversarial and invariant directions.
"""
from .config import (
    ACTIVATIONS,
    ExperimentConfig,
    PRESETS,
    STREAM_PERTURB,
    STREAM_TEACHER,
    STREAM_TEST,
    STREAM_TRAIN,
    STREAM_TRAIN_PAIR,
    STREAM_WEIGHTS,
    default_rel_tol,
    ratio_to_count,
    sigma_eps_for_snr,
    stream_rng,
)
from .decomposition import (
    BiasVarianceEstimate,
    PairedDraw,
    bias_variance_mc,
    draw_paired_replica,
    error_reduction_check,
    geometric_test_error,
    paired_projections,
)
from .errors import (
    ConfigurationError,
    DegenerateDirectionError,
    ExperimentError,
    NumericError,
    ShapeError,
)
from .experiments import (
    ALL_METRICS,
    NORMALIZED_METRICS,
    SweepResult,
    SweepRow,
    SweepSpec,
    metric_frobenius_complements,
    run_sweep,
    summarize,
)
from .geometry import (
    FeatureOperatorAnalysis,
    LabelProjector,
    Representation,
    analysis_to_json_dict,
    analyze_operator,
    angles_from_vectors,
    feature_operator,
    feature_operator_from_model,
    internal_representation,
    label_projector,
    prediction_decomposition,
)
from .linreg_core import (
    Dataset,
    FeatureMap,
    FittedModel,
    TeacherModel,
    apply_features,
    fit,
    load_dataset_csv,
    make_feature_map,
    predict,
    pseudoinverse,
    sample_dataset,
    sample_teacher,
    save_dataset_csv,
    training_error,
)
from .perturbation import (
    PerturbationRecord,
    decompose_perturbation,
    directional_derivative,
    perturbation_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "ACTIVATIONS",
    "ALL_METRICS",
    "BiasVarianceEstimate",
    "ConfigurationError",
    "Dataset",
    "DegenerateDirectionError",
    "ExperimentConfig",
    "ExperimentError",
    "FeatureMap",
    "FeatureOperatorAnalysis",
    "FittedModel",
    "LabelProjector",
    "NORMALIZED_METRICS",
    "NumericError",
    "PRESETS",
    "PairedDraw",
    "PerturbationRecord",
    "Representation",
    "ShapeError",
    "STREAM_PERTURB",
    "STREAM_TEACHER",
    "STREAM_TEST",
    "STREAM_TRAIN",
    "STREAM_TRAIN_PAIR",
    "STREAM_WEIGHTS",
    "SweepResult",
    "SweepRow",
    "SweepSpec",
    "TeacherModel",
    "analysis_to_json_dict",
    "analyze_operator",
    "angles_from_vectors",
    "apply_features",
    "bias_variance_mc",
    "decompose_perturbation",
    "default_rel_tol",
    "directional_derivative",
    "draw_paired_replica",
    "error_reduction_check",
    "feature_operator",
    "feature_operator_from_model",
    "fit",
    "geometric_test_error",
    "internal_representation",
    "label_projector",
    "load_dataset_csv",
    "make_feature_map",
    "metric_frobenius_complements",
    "paired_projections",
    "perturbation_experiment",
    "predict",
    "prediction_decomposition",
    "pseudoinverse",
    "ratio_to_count",
    "run_sweep",
    "sample_dataset",
    "sample_teacher",
    "save_dataset_csv",
    "sigma_eps_for_snr",
    "stream_rng",
    "summarize",
    "training_error",
]
