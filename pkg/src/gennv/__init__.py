"""Generalized newsvendor toolkit.

Polynomial severity costs over random demand: exact optimal order quantities
for known demand models, non-parametric estimation from demand samples via a
segment-wise random polynomial, and Monte-Carlo drivers for existence and
MSE studies.
"""

__version__ = "0.1.0"

from .cost import (
    SeverityCost,
    SingularCriticalRatioError,
    cost,
    empirical_expected_cost,
    expected_cost,
)
from .demand import (
    DemandModel,
    EmpiricalDemand,
    ExponentialDemand,
    UniformDemand,
    load_demand_csv,
)
from .estimator import (
    EstimationResult,
    SampleStats,
    SegmentCoefficients,
    SingularVarianceError,
    asymptotic_variance,
    estimate_optimal_q,
    sample_moments,
    segment_coefficients,
    t_covariance,
    t_statistics,
)
from .foc import (
    FocCoefficients,
    RootReport,
    beta_coefficients,
    check_existence,
    exp_foc_residual,
    exp_solve,
    foc_residual,
    solve_population_foc,
    theta_moment,
    uniform_closed_form,
)
from .montecarlo import (
    CellSummary,
    ExperimentConfig,
    existence_table,
    mse_curves,
    run_cell,
    run_grid,
    write_outputs,
)
from .polyroot import (
    DegeneratePolynomialError,
    Poly,
    cauchy_bound,
    positive_roots,
    roots_in_interval,
    sign_variations,
)

__all__ = [
    "__version__",
    "SeverityCost", "SingularCriticalRatioError", "cost", "expected_cost",
    "empirical_expected_cost",
    "DemandModel", "UniformDemand", "ExponentialDemand", "EmpiricalDemand",
    "load_demand_csv",
    "EstimationResult", "SampleStats", "SegmentCoefficients",
    "SingularVarianceError", "asymptotic_variance", "estimate_optimal_q",
    "sample_moments", "segment_coefficients", "t_covariance", "t_statistics",
    "FocCoefficients", "RootReport", "beta_coefficients", "check_existence",
    "exp_foc_residual", "exp_solve", "foc_residual", "solve_population_foc",
    "theta_moment", "uniform_closed_form",
    "CellSummary", "ExperimentConfig", "existence_table", "mse_curves",
    "run_cell", "run_grid", "write_outputs",
    "DegeneratePolynomialError", "Poly", "cauchy_bound", "positive_roots",
    "roots_in_interval", "sign_variations",
]
