"""Thresholds of high-dimensional Poisson Boolean models.

Computes the degree, percolation, and volume-fraction thresholds of a
Boolean model whose grain radii satisfy a large-deviations principle,
evaluates the matching finite-dimension quantities in the log domain,
and cross-checks them with a branching-process percolation probe and
seeded Monte Carlo.  All exponents and thresholds are in nats.
"""
from .branching import (
    BranchingProbe,
    default_thinning_slack,
    penrose_log_y,
    percolation_probe_scan,
    poisson_gw_survival,
    survival_from_log_y,
    thinned_log_y,
)
from .errors import BoolthreshError, ConsistencyError, QuadratureError, ValidationError
from .finite_n import (
    FiniteNPoint,
    ModelSpec,
    QuadratureConfig,
    ScanResult,
    coverage_probability,
    exponent_scan,
    gaussian_chi_log_moment,
    gaussian_radius_log_density,
    log_ball_volume,
    log_integral,
    log_mean_indegree,
    log_mean_palm_degree,
    log_radius_moment,
    log_radius_tail,
    log_shifted_radius_moment,
    radius_support_hi,
)
from .mc import (
    GENERATOR_NAME,
    McConfig,
    McEstimate,
    mc_conditional_poisson_degree,
    mc_coverage,
    mc_palm_degree,
    sample_point_in_ball,
)
from .rate import (
    Deterministic,
    FromLogMgf,
    GaussianGrain,
    MomentConditionReport,
    RateFunction,
    TabulatedConvex,
    build_rate,
    check_moment_condition,
    gaussian_log_mgf,
    gaussian_rate_value,
    golden_section_max,
    golden_section_min,
    legendre_transform,
    radius_law_from_dict,
    tabulated_from_csv,
    validate_law,
)
from .thresholds import (
    MINUS_HALF_LOG_2PIE,
    OptimalityCertificate,
    Target,
    ThresholdReport,
    report,
    solve_gaussian_cubic,
    solve_optimal_radius,
    tau_degree,
    tau_percolation,
    tau_volume,
)

__version__ = "0.1.0"
