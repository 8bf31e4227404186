"""Bias-reduced estimation of the MAD parameter in median regression."""

__version__ = "0.1.0"

from madreg.design import DesignKind, DesignMatrix, gen_anova_design, gen_normal_design
from madreg.distributions import (
    ErrorDistribution,
    abs_variance,
    density_at_zero,
    sample_errors,
)
from madreg.estimators import (
    EmpiricalEstimate,
    EstimatorSet,
    estimate,
    estimate_all,
    exact_correction_factor,
    gamma_bar,
    gamma_check,
    gamma_tilde,
    gap_statistic,
    kde_f0,
    silverman_bandwidth,
)
from madreg.l1fit import (
    FitResult,
    FitStatus,
    fit_median_regression,
    mad_criterion,
    standardized_residuals,
)
from madreg.simulation import (
    ReplicateRecord,
    SimCell,
    SimulationTable,
    default_grid,
    qq_data,
    run_grid,
    run_replicate,
    z_statistic,
)

__all__ = [
    "DesignKind",
    "DesignMatrix",
    "EmpiricalEstimate",
    "ErrorDistribution",
    "EstimatorSet",
    "FitResult",
    "FitStatus",
    "ReplicateRecord",
    "SimCell",
    "SimulationTable",
    "abs_variance",
    "default_grid",
    "density_at_zero",
    "estimate",
    "estimate_all",
    "exact_correction_factor",
    "fit_median_regression",
    "gamma_bar",
    "gamma_check",
    "gamma_tilde",
    "gap_statistic",
    "gen_anova_design",
    "gen_normal_design",
    "kde_f0",
    "mad_criterion",
    "qq_data",
    "run_grid",
    "run_replicate",
    "sample_errors",
    "silverman_bandwidth",
    "standardized_residuals",
    "z_statistic",
]
