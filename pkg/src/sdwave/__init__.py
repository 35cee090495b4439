"""Spectral Galerkin solver for a semilinear stochastic damped wave
equation on (0, 1), with an exponential integrator whose noise
increments are sampled from their exact joint law, a linear-implicit
baseline, and a Monte-Carlo convergence-study harness."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateFit,
    DimensionMismatch,
    NonFiniteValue,
    NotPositiveSemidefinite,
    RatioMismatch,
    SdwaveError,
)
from .experiments import (
    ErrorRecord,
    SlopeFit,
    StudyResult,
    StudySpec,
    aggregate_errors,
    emit_results,
    fit_slope,
    ms_error,
    predicted_slopes,
    run_study,
    spatial_study,
    temporal_study,
)
from .integrators import (
    State,
    StepPlan,
    aee_step,
    integrate,
    lie_step,
    propagate_noise_fine_to_coarse,
    propagation_coeffs,
    run_march,
)
from .noise import (
    IncrementCovariance,
    NoiseSpec,
    NoiseStream,
    NoiseTriple,
    cholesky,
    covariance_quadrature_oracle,
    generate_increments,
    increment_covariance,
    increment_factors,
    sample_increments,
)
from .nonlinearity import (
    BENCHMARK_NONLINEARITY,
    NemytskiiSpec,
    analyze,
    apply_nemytskii,
    make_nemytskii,
    synthesize,
)
from .problem import ProblemConfig, build_modes
from .spectral import (
    EPS_ROOT,
    ModeData,
    SemigroupMatrix,
    eigenvalue,
    make_mode,
    make_modes,
    mode_roots,
    semigroup_coeffs,
    semigroup_table,
)

__all__ = [
    "__version__",
    "BENCHMARK_NONLINEARITY",
    "ConfigError",
    "DegenerateFit",
    "DimensionMismatch",
    "EPS_ROOT",
    "ErrorRecord",
    "IncrementCovariance",
    "ModeData",
    "NemytskiiSpec",
    "NoiseSpec",
    "NoiseStream",
    "NoiseTriple",
    "NonFiniteValue",
    "NotPositiveSemidefinite",
    "ProblemConfig",
    "RatioMismatch",
    "SdwaveError",
    "SemigroupMatrix",
    "SlopeFit",
    "State",
    "StepPlan",
    "StudyResult",
    "StudySpec",
    "aee_step",
    "aggregate_errors",
    "analyze",
    "apply_nemytskii",
    "build_modes",
    "cholesky",
    "covariance_quadrature_oracle",
    "eigenvalue",
    "emit_results",
    "fit_slope",
    "generate_increments",
    "increment_covariance",
    "increment_factors",
    "integrate",
    "lie_step",
    "make_mode",
    "make_modes",
    "make_nemytskii",
    "mode_roots",
    "ms_error",
    "predicted_slopes",
    "propagate_noise_fine_to_coarse",
    "propagation_coeffs",
    "run_march",
    "run_study",
    "sample_increments",
    "semigroup_coeffs",
    "semigroup_table",
    "spatial_study",
    "synthesize",
    "temporal_study",
]
