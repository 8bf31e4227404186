"""Standardized error laws: median zero and unit mean absolute value.

Both laws are scale-free once standardized, so an :class:`ErrorDistribution`
is just a tag. The normal law is N(0, pi/2) and the Laplace law is
Laplace(0, 1); each has E|e| = 1.
"""

from __future__ import annotations

import enum
import math

import numpy as np


_MANTISSA = 2**53


class ErrorDistribution(str, enum.Enum):
    NORMAL = "normal"
    LAPLACE = "laplace"

    @classmethod
    def from_token(cls, token: str) -> "ErrorDistribution":
        try:
            return cls(token.strip().lower())
        except ValueError:
            choices = ", ".join(d.value for d in cls)
            raise ValueError(f"unknown error distribution {token!r}; expected one of {choices}") from None


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator for an integer seed or a SeedSequence."""
    return np.random.Generator(np.random.PCG64(seed))


def _open_uniform(rng: np.random.Generator, n: int) -> np.ndarray:
    # Uniforms strictly inside (0, 1) so the inverse CDF never hits log(0).
    return (rng.integers(0, _MANTISSA, size=n, dtype=np.int64) + 0.5) / _MANTISSA


def laplace_inverse_cdf(u: np.ndarray) -> np.ndarray:
    """Quantile function of Laplace(0, 1) for u in (0, 1)."""
    centred = np.asarray(u, dtype=float) - 0.5
    return -np.sign(centred) * np.log1p(-2.0 * np.abs(centred))


def sample_errors(dist: ErrorDistribution, n: int, seed) -> np.ndarray:
    """Draw ``n`` i.i.d. standardized errors.

    The output is a pure function of ``(dist, n, seed)`` within one build.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    dist = ErrorDistribution(dist)
    rng = make_rng(seed)
    if dist is ErrorDistribution.NORMAL:
        return rng.normal(0.0, math.sqrt(math.pi / 2.0), size=n)
    return laplace_inverse_cdf(_open_uniform(rng, n))


def density_at_zero(dist: ErrorDistribution) -> float:
    dist = ErrorDistribution(dist)
    if dist is ErrorDistribution.NORMAL:
        # 1 / sqrt(2 pi * pi/2)
        return 1.0 / math.pi
    return 0.5


def abs_variance(dist: ErrorDistribution) -> float:
    """Variance of |e| under the standardized law."""
    dist = ErrorDistribution(dist)
    if dist is ErrorDistribution.NORMAL:
        return math.pi / 2.0 - 1.0
    return 1.0
