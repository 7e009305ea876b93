"""Localized complexity of ellipses: widths, critical radii and LSE risk."""

from .core import (
    DEFAULT_ETA,
    EllipseError,
    EllipseSpec,
    LocalizedSection,
    contains,
    elliptic_norm,
    rescale_problem,
    unscale_radius,
)
from .experiments import (
    ExperimentConfig,
    RiskCurve,
    fit_loglog_slope,
    reproduce_figure3,
    run_risk_curve,
)
from .kernels import (
    KernelSpec,
    SpectrumReport,
    classify_decay,
    ellipse_from_kernel,
    gram_matrix,
    sym_eigenvalues,
)
from .optimize import (
    DualCertificate,
    SolverError,
    dykstra_project_intersection,
    lse,
    max_linear_over_intersection,
    project_ellipse,
)
from .packing import entropy_sandwich_report, greedy_packing, sample_from_section
from .rates import (
    critical_functional,
    minimax_bounds,
    minimize_critical_functional,
    predicted_rate,
    solve_fixed_point,
)
from .widths import (
    BoundsUnavailable,
    CriticalDimension,
    WidthEstimate,
    critical_dimension_bounds,
    critical_dimension_centered,
    gaussian_width_mc,
    kolmogorov_width_centered,
    lower_bound_valid_range,
    phi,
    phi_inverse,
    regularity_check,
    width_lower_bound,
    width_upper_bound,
)

__version__ = "0.1.0"

__all__ = [
    "BoundsUnavailable",
    "CriticalDimension",
    "DEFAULT_ETA",
    "DualCertificate",
    "EllipseError",
    "EllipseSpec",
    "ExperimentConfig",
    "KernelSpec",
    "LocalizedSection",
    "RiskCurve",
    "SolverError",
    "SpectrumReport",
    "WidthEstimate",
    "classify_decay",
    "contains",
    "critical_dimension_bounds",
    "critical_dimension_centered",
    "critical_functional",
    "dykstra_project_intersection",
    "ellipse_from_kernel",
    "elliptic_norm",
    "entropy_sandwich_report",
    "fit_loglog_slope",
    "gaussian_width_mc",
    "gram_matrix",
    "greedy_packing",
    "kolmogorov_width_centered",
    "lower_bound_valid_range",
    "lse",
    "max_linear_over_intersection",
    "minimax_bounds",
    "minimize_critical_functional",
    "phi",
    "phi_inverse",
    "predicted_rate",
    "project_ellipse",
    "regularity_check",
    "reproduce_figure3",
    "rescale_problem",
    "run_risk_curve",
    "sample_from_section",
    "solve_fixed_point",
    "sym_eigenvalues",
    "unscale_radius",
    "width_lower_bound",
    "width_upper_bound",
]
