"""MAD estimators and their bias corrections.

Four estimators of the MAD parameter are produced per data set:

* ``gamma_bar``: the criterion at the true coefficients (simulation only),
* ``gamma_hat``: the minimized criterion, biased downwards,
* ``gamma_tilde``: ``gamma_hat / (1 - c)`` with ``c = (p/n) / (4 f(0))``,
* ``gamma_check``: the same correction with ``f(0)`` replaced by a Gaussian
  kernel density estimate at zero of the standardized residuals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from madreg.distributions import ErrorDistribution, density_at_zero
from madreg.errors import CorrectionTooLargeError, DegenerateSampleError, NegativeGapError
from madreg.l1fit import (
    DEFAULT_TOL,
    FitResult,
    fit_median_regression,
    mad_criterion,
    standardized_residuals,
)

SILVERMAN = "silverman"
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class EstimatorSet:
    """All estimators for one simulated replicate.

    Undefined corrections (factor >= 1) are stored as NaN.
    """

    gamma_bar: float
    gamma_hat: float
    gamma_tilde: float
    gamma_check: float
    c_exact: float
    c_hat: float
    f0_hat: float
    bandwidth: float


@dataclass(frozen=True)
class EmpiricalEstimate:
    """Feasible estimates for real data, where the true coefficients are unknown."""

    gamma_hat: float
    f0_hat: float
    c_hat: float
    gamma_check: float
    bandwidth: float
    bandwidth_rule: str
    n: int
    p: int
    fit: FitResult


def gamma_bar(X, Y, beta_true) -> float:
    """Oracle estimator: the MAD criterion evaluated at the true coefficients."""
    return mad_criterion(X, Y, beta_true)


def _correction(p: int, n: int, f0: float) -> float:
    if n <= 0:
        raise ValueError(f"n must be positive, got {n}")
    if not f0 > 0.0:
        raise ValueError(f"density at zero must be positive, got {f0}")
    return (p / n) / (4.0 * f0)


def exact_correction_factor(p: int, n: int, f0: float) -> float:
    """Leading relative bias ``c = (p/n) / (4 f0)`` of the minimized criterion.

    Raises:
        CorrectionTooLargeError: if ``c >= 1``.
    """
    c = _correction(p, n, f0)
    if c >= 1.0:
        raise CorrectionTooLargeError(f"correction factor c = {c:.6g} >= 1 (p={p}, n={n}, f0={f0:.6g})")
    return c


def gamma_tilde(gamma_hat: float, c: float) -> float:
    if not 0.0 <= c < 1.0:
        if c >= 1.0:
            raise CorrectionTooLargeError(f"correction factor c = {c:.6g} >= 1")
        raise ValueError(f"correction factor must be nonnegative, got {c}")
    return gamma_hat / (1.0 - c)


def gamma_check(gamma_hat: float, p: int, n: int, f0_hat: float) -> float:
    """Empirically corrected estimator ``gamma_hat / (1 - (p/n) / (4 f0_hat))``."""
    c_hat = _correction(p, n, f0_hat)
    if c_hat >= 1.0:
        raise CorrectionTooLargeError(f"empirical correction factor = {c_hat:.6g} >= 1 (p={p}, n={n}, f0_hat={f0_hat:.6g})")
    return gamma_tilde(gamma_hat, c_hat)


def silverman_bandwidth(x) -> float:
    """Silverman's rule of thumb ``0.9 min(sd, IQR/1.34) n^(-1/5)``."""
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise DegenerateSampleError("bandwidth needs at least two observations")
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75.0, 25.0])
    spread = min(sd, float(q75 - q25) / 1.34)
    if not spread > 0.0:
        # IQR can vanish while sd does not (heavy ties); fall back to sd.
        spread = sd
    if not spread > 0.0:
        raise DegenerateSampleError("all residuals are identical; bandwidth undefined")
    return 0.9 * spread * n ** (-0.2)


def resolve_bandwidth(residuals, bandwidth) -> float:
    if bandwidth is None or (isinstance(bandwidth, str) and bandwidth.lower() == SILVERMAN):
        return silverman_bandwidth(residuals)
    h = float(bandwidth)
    if not h > 0.0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth!r}")
    return h


def kde_f0(residuals, bandwidth=SILVERMAN) -> float:
    """Gaussian kernel density estimate at zero.

    Args:
        residuals: sample to smooth (standardized residuals in practice).
        bandwidth: a positive number or ``"silverman"``.
    """
    x = np.asarray(residuals, dtype=float).ravel()
    if x.size < 2:
        raise DegenerateSampleError("kernel density estimate needs at least two observations")
    if np.all(x == x[0]):
        raise DegenerateSampleError("all residuals are identical")
    h = resolve_bandwidth(x, bandwidth)
    u = x / h
    with np.errstate(over="ignore"):  # far-away points contribute exp(-inf) = 0
        f0 = float(np.sum(np.exp(-0.5 * u * u)) * _INV_SQRT_2PI / (x.size * h))
    if not f0 > 0.0:
        raise DegenerateSampleError(f"density estimate at zero underflows (bandwidth {h:.3g}, no mass near 0)")
    return f0


def gap_statistic(gamma_bar: float, gamma_hat: float, n: int, f0: float, gamma_true: float) -> float:
    """Rescaled gap ``n (gamma_bar - gamma_hat) 4 f0 / gamma``; approximately chi-square(p)."""
    if gamma_bar < gamma_hat:
        raise NegativeGapError(
            f"gamma_bar = {gamma_bar!r} < gamma_hat = {gamma_hat!r}; the minimizer is not optimal"
        )
    return n * (gamma_bar - gamma_hat) * 4.0 * f0 / gamma_true


def _safe(func, *args) -> float:
    try:
        return func(*args)
    except CorrectionTooLargeError:
        return math.nan


def estimate(X, Y, bandwidth=SILVERMAN, tol: float = DEFAULT_TOL) -> EmpiricalEstimate:
    """Fit the median regression and apply the empirical correction.

    Raises:
        ZeroMADError: the fit interpolates every observation.
        CorrectionTooLargeError: the empirical correction factor is >= 1.
    """
    fit = fit_median_regression(X, Y, tol=tol)
    n = np.asarray(Y).shape[0]
    p = fit.beta_hat.shape[0]
    resid = standardized_residuals(X, Y, fit)
    h = resolve_bandwidth(resid, bandwidth)
    f0_hat = kde_f0(resid, h)
    c_hat = _correction(p, n, f0_hat)
    check = gamma_check(fit.objective, p, n, f0_hat)
    rule = SILVERMAN if isinstance(bandwidth, str) or bandwidth is None else "fixed"
    return EmpiricalEstimate(
        gamma_hat=fit.objective,
        f0_hat=f0_hat,
        c_hat=c_hat,
        gamma_check=check,
        bandwidth=h,
        bandwidth_rule=rule,
        n=n,
        p=p,
        fit=fit,
    )


def estimate_all(
    X,
    Y,
    beta_true,
    dist: ErrorDistribution,
    bandwidth=SILVERMAN,
    fit: FitResult | None = None,
    tol: float = DEFAULT_TOL,
) -> EstimatorSet:
    """All four estimators for a simulated data set with known coefficients.

    Corrections whose factor is >= 1 come back as NaN instead of raising.
    """
    if fit is None:
        fit = fit_median_regression(X, Y, tol=tol)
    n = np.asarray(Y).shape[0]
    p = fit.beta_hat.shape[0]
    g_bar = gamma_bar(X, Y, beta_true)
    g_hat = fit.objective
    c = _correction(p, n, density_at_zero(dist))
    resid = standardized_residuals(X, Y, fit)
    h = resolve_bandwidth(resid, bandwidth)
    f0_hat = kde_f0(resid, h)
    c_hat = _correction(p, n, f0_hat)
    return EstimatorSet(
        gamma_bar=g_bar,
        gamma_hat=g_hat,
        gamma_tilde=_safe(gamma_tilde, g_hat, c),
        gamma_check=_safe(gamma_check, g_hat, p, n, f0_hat),
        c_exact=c,
        c_hat=c_hat,
        f0_hat=f0_hat,
        bandwidth=h,
    )
