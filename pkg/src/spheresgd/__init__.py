"""Single-pass kernel SGD on the sphere: spectra, schedules, and rate theory.

The compiled coefficient-update core is used when available; BACKEND reports
which implementation was selected at import ("cython" or "fallback", also
forceable via the SPHERESGD_FORCE_FALLBACK environment variable).
"""

from ._core import BACKEND
from .dot_kernels import (
    NtkKernel,
    PowerSeriesKernel,
    arc_kappa0,
    arc_kappa1,
    gram_row,
    kernel_bound,
    kernel_eval,
    linear_kernel,
)
from .errors import (
    ConfigError,
    DataExhaustedError,
    InvalidStateError,
    NumericalFailureError,
    PreconditionError,
)
from .risk_metrics import RateReport, RiskEstimate, excess_risk, fit_slope
from .sgd_engine import (
    ConstantAvgSchedule,
    ExpDecaySchedule,
    SgdState,
    predict,
    run_single_pass,
    sgd_step,
    step_size_at,
)
from .spectral import (
    SpectralProfile,
    compute_spectrum,
    effective_dimension,
    tail_sum_squared,
)
from .sphere_harmonics import (
    UltrasphericalBasis,
    gegenbauer_eval,
    harmonic_multiplicity,
    sample_uniform_sphere,
    zonal_values,
)
from .synthetic_targets import (
    HarmonicModeTarget,
    KernelCombinationTarget,
    generate_labels,
    make_kernel_target,
    make_source_target,
    target_eval,
)
from .theory_rates import (
    DiagonalModel,
    RatePlan,
    avg_lower_bound,
    avg_pop_bias_exact,
    avg_pop_variance_exact,
    avg_upper_bound,
    classify_rate,
    dec_upper_bound,
    minimax_rate_asymptotic,
    minimax_rate_highdim,
    pop_bias_exact,
    pop_variance_exact,
    recommend_eta0,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "__version__",
    # kernels
    "NtkKernel",
    "PowerSeriesKernel",
    "linear_kernel",
    "arc_kappa0",
    "arc_kappa1",
    "kernel_eval",
    "kernel_bound",
    "gram_row",
    # sphere / harmonics
    "sample_uniform_sphere",
    "zonal_values",
    "gegenbauer_eval",
    "UltrasphericalBasis",
    "harmonic_multiplicity",
    # spectra
    "SpectralProfile",
    "compute_spectrum",
    "effective_dimension",
    "tail_sum_squared",
    # sgd
    "ExpDecaySchedule",
    "ConstantAvgSchedule",
    "step_size_at",
    "SgdState",
    "sgd_step",
    "run_single_pass",
    "predict",
    # targets
    "KernelCombinationTarget",
    "HarmonicModeTarget",
    "make_kernel_target",
    "make_source_target",
    "target_eval",
    "generate_labels",
    # theory
    "RatePlan",
    "classify_rate",
    "recommend_eta0",
    "minimax_rate_highdim",
    "minimax_rate_asymptotic",
    "DiagonalModel",
    "pop_bias_exact",
    "pop_variance_exact",
    "avg_pop_bias_exact",
    "avg_pop_variance_exact",
    "dec_upper_bound",
    "avg_upper_bound",
    "avg_lower_bound",
    # risk
    "RiskEstimate",
    "excess_risk",
    "fit_slope",
    "RateReport",
    # errors
    "ConfigError",
    "PreconditionError",
    "InvalidStateError",
    "DataExhaustedError",
    "NumericalFailureError",
]
