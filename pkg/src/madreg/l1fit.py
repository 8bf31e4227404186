"""Median (L1) regression.

The fit minimizes the MAD criterion ``mean(|Y - X b|)``, which is the linear
program ``min sum(u + v)`` subject to ``Y - X b = u - v`` with ``u, v >= 0``.
It is solved by a simplex method on the basis representation used by
Barrodale-Roberts style L1 solvers. A vertex is a set of ``p`` observations
fitted exactly; each pivot leaves the vertex along the edge with the most
negative directional derivative and moves to the weighted-median breakpoint
on that edge, so the objective decreases strictly at every pivot.

Primal degeneracy (ties among the responses) is avoided by a tiny
deterministic perturbation of ``Y`` that is used only to steer the pivots.
The final coefficients are re-solved from the optimal basis with the
original responses and the objective is recomputed from them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from madreg.design import as_array
from madreg.errors import (
    DimensionMismatchError,
    InvalidDimensionsError,
    RankDeficientError,
    SolverFailure,
    ZeroMADError,
)

DEFAULT_TOL = 1e-9
RANK_RTOL = 1e-10
_PERTURBATION = 1e-11
_REFRESH_EVERY = 64
_SPLITTER = 134217729.0  # 2**27 + 1


class FitStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    DEGENERATE_OPTIMAL = "DegenerateOptimal"
    FAILED = "Failed"


@dataclass(frozen=True)
class FitResult:
    beta_hat: np.ndarray
    objective: float
    iterations: int
    status: FitStatus
    basis: tuple[int, ...] = ()


def _check_xy(X, Y) -> tuple[np.ndarray, np.ndarray]:
    X = as_array(X)
    Y = np.asarray(Y, dtype=float).ravel()
    if X.shape[0] != Y.shape[0]:
        raise DimensionMismatchError(f"design has {X.shape[0]} rows but response has {Y.shape[0]} entries")
    return X, Y


def _split(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_product(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Error-free product: ``a * b == prod + err`` exactly (Dekker)."""
    prod = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - prod) + ah * bl + al * bh) + al * bl
    return prod, err


def mad_criterion(X, Y, b) -> float:
    """Mean absolute residual ``(1/n) sum |Y_i - x_i' b|``.

    The sum of absolute residuals is evaluated exactly and rounded once
    before the division by n. Both steps are monotone, so comparing two
    criterion values never contradicts exact arithmetic.
    """
    X, Y = _check_xy(X, Y)
    b = np.asarray(b, dtype=float).ravel()
    if X.shape[1] != b.shape[0]:
        raise DimensionMismatchError(f"design has {X.shape[1]} columns but b has {b.shape[0]} entries")
    n = Y.shape[0]
    if n == 0:
        raise DimensionMismatchError("empty response")
    prod, err = _two_product(X, b[None, :])
    # Row i of `parts` sums exactly to the residual Y_i - x_i' b.
    parts = np.concatenate([Y[:, None], -prod, -err], axis=1)
    approx = Y - prod.sum(axis=1)
    bound = 4.0 * parts.shape[1] * np.finfo(float).eps * np.abs(parts).sum(axis=1)
    sign = np.sign(approx)
    for i in np.flatnonzero(np.abs(approx) <= bound):
        sign[i] = np.sign(math.fsum(parts[i]))
    signed = (parts * sign[:, None]).ravel()
    return math.fsum(signed[signed != 0.0].tolist()) / n


def _check_rank(X: np.ndarray, rtol: float) -> None:
    sv = np.linalg.svd(X, compute_uv=False)
    if sv.size == 0 or sv[-1] <= rtol * sv[0]:
        raise RankDeficientError(
            f"design is rank deficient (smallest/largest singular value = {sv[-1] / sv[0] if sv.size and sv[0] else 0.0:.3g})"
        )


def _jitter(n: int) -> np.ndarray:
    # Fixed, data-independent perturbation pattern in (-1, 1).
    i = np.arange(1, n + 1, dtype=float)
    return 2.0 * np.modf(i * 0.6180339887498949)[0] - 1.0


def _initial_basis(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Pick p rows that are well conditioned and close to the least-squares fit."""
    p = X.shape[1]
    ls, *_ = np.linalg.lstsq(X, Y, rcond=None)
    resid = np.abs(Y - X @ ls)
    weights = 1.0 / (resid + 1e-3 * (np.median(resid) + 1e-300))
    _, _, piv = scipy.linalg.qr((X * weights[:, None]).T, mode="economic", pivoting=True)
    return np.sort(piv[:p])


def _line_search(r: np.ndarray, z: np.ndarray, nonbasic: np.ndarray, slope: float) -> int:
    """Index of the breakpoint minimizing ``t + sum |r_i - t z_i|`` along t > 0.

    ``slope`` is the derivative at t = 0+; passing breakpoint i adds 2|z_i|.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        t = r / z
    cand = nonbasic & (z != 0.0) & (t > 0.0)
    idx = np.flatnonzero(cand)
    order = idx[np.argsort(t[idx], kind="stable")]
    cum = slope + np.cumsum(2.0 * np.abs(z[order]))
    stop = int(np.searchsorted(cum >= 0.0, True))
    if stop >= order.size:
        raise SolverFailure("line search found no breakpoint; design may be rank deficient")
    return int(order[stop])


def _inverse(B: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.inv(B)
    except np.linalg.LinAlgError as exc:
        raise SolverFailure(f"singular basis encountered: {exc}") from exc


def _vertex_state(X, Yp, basis, Binv):
    """Residuals at the vertex and the edge weights of its basis.

    Along +/- column j of the basis inverse the objective changes with slope
    ``1 -/+ w_j``, where w_j sums s_i (X B^-1)_ij over nonbasic rows.
    """
    b = Binv @ Yp[basis]
    r = Yp - X @ b
    r[basis] = 0.0
    w = (X.T @ np.sign(r)) @ Binv
    return r, w


def _pivot(X, basis, nonbasic, Binv, j, entering, since_refresh):
    u = X[entering] - X[basis[j]]
    nonbasic[basis[j]] = True
    nonbasic[entering] = False
    basis[j] = entering
    since_refresh += 1
    if since_refresh >= _REFRESH_EVERY:
        return _inverse(X[basis]), 0
    # Sherman-Morrison update for replacing row j of the basis matrix.
    col = Binv[:, j]
    row = u @ Binv
    denom = 1.0 + row[j]
    if abs(denom) < 1e-12:
        return _inverse(X[basis]), 0
    return Binv - np.outer(col, row) / denom, since_refresh


def _lex_decreasing_edges(Binv: np.ndarray, w: np.ndarray, flat: np.ndarray) -> np.ndarray:
    """Flat edge indices whose direction is lexicographically negative."""
    cols = np.flatnonzero(flat)
    D = Binv[:, cols] * np.sign(w[cols])
    eps = 1e-12 * np.maximum(1.0, np.abs(D).max(axis=0))
    nonzero = np.abs(D) > eps
    has = nonzero.any(axis=0)
    first = np.argmax(nonzero, axis=0)
    lead = D[first, np.arange(cols.size)]
    return cols[has & (lead < 0.0)]


def fit_median_regression(X, Y, tol: float = DEFAULT_TOL, max_iter: int | None = None) -> FitResult:
    """Minimize the MAD criterion over coefficient vectors.

    Args:
        X: n x p design (DesignMatrix or array) with full column rank.
        Y: length-n response.
        tol: optimality tolerance on the edge directional derivatives.
        max_iter: pivot cap, default ``50 * (n + p)``.

    Returns:
        FitResult with ``objective`` recomputed from ``beta_hat``. When the
        minimizer is not unique the status is ``DegenerateOptimal`` and the
        coefficients are the lexicographically smallest optimal vertex
        reachable through flat edges.

    Raises:
        InvalidDimensionsError: n < p or p == 0.
        RankDeficientError: X is (numerically) column rank deficient.
        SolverFailure: the pivot cap was exceeded.
    """
    X, Y = _check_xy(X, Y)
    n, p = X.shape
    if p < 1 or n < p:
        raise InvalidDimensionsError(f"need n >= p >= 1, got n={n}, p={p}")
    _check_rank(X, RANK_RTOL)
    if max_iter is None:
        max_iter = 50 * (n + p)

    scale = float(np.max(np.abs(Y))) if n else 0.0
    Yp = Y + _PERTURBATION * (scale if scale > 0 else 1.0) * _jitter(n)

    basis = _initial_basis(X, Yp)
    nonbasic = np.ones(n, dtype=bool)
    nonbasic[basis] = False
    Binv = _inverse(X[basis])
    iterations = 0
    since_refresh = 0

    while True:
        r, w = _vertex_state(X, Yp, basis, Binv)
        j = int(np.argmax(np.abs(w)))
        if np.abs(w[j]) <= 1.0 + tol:
            if since_refresh == 0:
                break
            # Confirm optimality with a freshly factorized basis.
            Binv = _inverse(X[basis])
            since_refresh = 0
            continue
        if iterations >= max_iter:
            raise SolverFailure(f"iteration cap of {max_iter} pivots exceeded")
        d = np.sign(w[j]) * Binv[:, j]
        z = X @ d
        entering = _line_search(r, z, nonbasic, 1.0 - abs(w[j]))
        Binv, since_refresh = _pivot(X, basis, nonbasic, Binv, j, entering, since_refresh)
        iterations += 1

    # Flat edges mean the minimizer set is not a singleton.
    flat = np.abs(w) >= 1.0 - tol
    status = FitStatus.DEGENERATE_OPTIMAL if flat.any() else FitStatus.OPTIMAL

    # Walk flat edges towards the lexicographically smallest vertex.
    walk_cap = max_iter
    while flat.any() and walk_cap > 0:
        moved = False
        for j in _lex_decreasing_edges(Binv, w, flat):
            d = np.sign(w[j]) * Binv[:, j]
            z = X @ d
            with np.errstate(divide="ignore", invalid="ignore"):
                t = r / z
            cand = nonbasic & (z != 0.0) & (t > 0.0)
            if not cand.any():
                continue
            idx = np.flatnonzero(cand)
            entering = int(idx[np.argmin(t[idx])])
            Binv, since_refresh = _pivot(X, basis, nonbasic, Binv, j, entering, since_refresh)
            moved = True
            break
        if not moved:
            break
        walk_cap -= 1
        iterations += 1
        r, w = _vertex_state(X, Yp, basis, Binv)
        flat = np.abs(w) >= 1.0 - tol

    order = np.argsort(basis)
    basis = basis[order]
    beta_hat = scipy.linalg.solve(X[basis], Y[basis], check_finite=False)
    objective = mad_criterion(X, Y, beta_hat)
    return FitResult(
        beta_hat=beta_hat,
        objective=objective,
        iterations=iterations,
        status=status,
        basis=tuple(int(i) for i in basis),
    )


def standardized_residuals(X, Y, fit: FitResult) -> np.ndarray:
    """Residuals divided by the minimized criterion; ``mean(|e|) == 1``."""
    X, Y = _check_xy(X, Y)
    if not fit.objective > 0.0:
        raise ZeroMADError("fit interpolates the data (zero MAD); standardized residuals are undefined")
    return (Y - X @ fit.beta_hat) / fit.objective
