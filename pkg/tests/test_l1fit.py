import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from madreg.design import gen_anova_design, gen_normal_design
from madreg.errors import (
    DimensionMismatchError,
    InvalidDimensionsError,
    RankDeficientError,
    SolverFailure,
    ZeroMADError,
)
from madreg.l1fit import FitStatus, fit_median_regression, mad_criterion, standardized_residuals

from oracles import brute_force_median_objective, group_median_objective, lp_l1_objective

ONES3 = np.ones((3, 1))


def test_criterion_hand_value():
    assert mad_criterion(ONES3, [1, 2, 4], [2]) == pytest.approx(1.0)


def test_criterion_zero_on_exact_fit(rng):
    X = rng.standard_normal((10, 3))
    b = rng.standard_normal(3)
    assert mad_criterion(X, X @ b, b) == pytest.approx(0.0, abs=1e-15)


def test_criterion_homogeneity(rng):
    X = rng.standard_normal((20, 2))
    Y = rng.standard_normal(20)
    b = rng.standard_normal(2)
    assert mad_criterion(X, 3 * Y, 3 * b) == pytest.approx(3 * mad_criterion(X, Y, b))


def test_criterion_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        mad_criterion(ONES3, [1, 2], [0])
    with pytest.raises(DimensionMismatchError):
        mad_criterion(ONES3, [1, 2, 3], [0, 1])


def test_fit_intercept_median():
    fit = fit_median_regression(ONES3, [1, 2, 4])
    assert fit.beta_hat == pytest.approx([2.0])
    assert fit.objective == pytest.approx(1.0)
    assert fit.status is FitStatus.OPTIMAL
    assert fit.objective == pytest.approx(brute_force_median_objective([1, 2, 4]))


def test_fit_anova_group_medians():
    X = gen_anova_design(2, 3)
    fit = fit_median_regression(X, [1, 3, 5, 10, 10, 10])
    assert fit.beta_hat == pytest.approx([3.0, 10.0])
    assert fit.objective == pytest.approx(2 / 3)


def test_fit_even_n_is_degenerate():
    for y in ([1, 2, 3, 4], [4, 3, 2, 1], [3, 1, 4, 2]):
        fit = fit_median_regression(np.ones((4, 1)), y)
        assert fit.objective == pytest.approx(1.0)
        assert 2.0 <= fit.beta_hat[0] <= 3.0
        assert fit.status is FitStatus.DEGENERATE_OPTIMAL
        # lexicographically smallest vertex of the optimal interval
        assert fit.beta_hat[0] == pytest.approx(2.0)


def test_fit_anova_even_groups_lower_medians(rng):
    X = gen_anova_design(5, 4)
    Y = rng.standard_normal(20)
    fit = fit_median_regression(X, Y)
    lower = [np.sort(Y[4 * g : 4 * g + 4])[1] for g in range(5)]
    assert fit.status is FitStatus.DEGENERATE_OPTIMAL
    np.testing.assert_allclose(fit.beta_hat, lower, atol=1e-12)


def test_fit_objective_is_recomputed(rng):
    X = rng.standard_normal((40, 4))
    Y = rng.laplace(size=40)
    fit = fit_median_regression(X, Y)
    assert fit.objective == mad_criterion(X, Y, fit.beta_hat)


@pytest.mark.parametrize("n,p", [(5, 1), (12, 3), (50, 5), (128, 16), (300, 30)])
def test_fit_matches_generic_lp(rng, n, p):
    for _ in range(5):
        X = rng.standard_normal((n, p))
        Y = rng.laplace(size=n)
        fit = fit_median_regression(X, Y)
        assert abs(fit.objective - lp_l1_objective(X, Y)) <= 1e-9


def test_fit_with_ties_matches_lp(rng):
    # integer responses produce many ties and primal degeneracy
    for _ in range(30):
        X = np.column_stack([np.ones(15), rng.integers(0, 3, size=15)])
        Y = rng.integers(-2, 3, size=15).astype(float)
        if np.linalg.matrix_rank(X) < 2:
            continue
        fit = fit_median_regression(X, Y)
        assert abs(fit.objective - lp_l1_objective(X, Y)) <= 1e-9


def test_fit_exact_interpolation():
    X = np.column_stack([np.ones(6), np.arange(6.0)])
    Y = 2.0 + 0.5 * np.arange(6.0)
    fit = fit_median_regression(X, Y)
    np.testing.assert_allclose(fit.beta_hat, [2.0, 0.5], atol=1e-12)
    assert fit.objective == pytest.approx(0.0, abs=1e-14)


def test_fit_square_system(rng):
    X = rng.standard_normal((4, 4))
    Y = rng.standard_normal(4)
    fit = fit_median_regression(X, Y)
    assert fit.objective == pytest.approx(0.0, abs=1e-12)


def test_fit_rank_deficient():
    X = np.column_stack([np.ones(5), np.ones(5)])
    with pytest.raises(RankDeficientError):
        fit_median_regression(X, np.arange(5.0))


def test_fit_invalid_dimensions():
    with pytest.raises(InvalidDimensionsError):
        fit_median_regression(np.ones((2, 3)), [1, 2])


def test_fit_iteration_cap(rng):
    X = rng.standard_normal((200, 10))
    Y = rng.laplace(size=200)
    with pytest.raises(SolverFailure):
        fit_median_regression(X, Y, max_iter=1)


def test_fit_accepts_design_matrix():
    X = gen_normal_design(30, 3, seed=4)
    Y = np.arange(30.0)
    assert fit_median_regression(X, Y).objective == pytest.approx(
        fit_median_regression(X.entries, Y).objective
    )


def test_standardized_residuals_example():
    fit = fit_median_regression(ONES3, [1, 2, 4])
    np.testing.assert_allclose(standardized_residuals(ONES3, [1, 2, 4], fit), [-1.0, 0.0, 2.0])


def test_standardized_residuals_unit_mean(rng):
    X = rng.standard_normal((60, 4))
    Y = rng.standard_normal(60)
    fit = fit_median_regression(X, Y)
    e = standardized_residuals(X, Y, fit)
    assert np.mean(np.abs(e)) == pytest.approx(1.0, abs=1e-14)


def test_standardized_residuals_zero_mad():
    X = np.column_stack([np.ones(4), np.arange(4.0)])
    Y = 1.0 + np.arange(4.0)
    fit = fit_median_regression(X, Y)
    with pytest.raises(ZeroMADError):
        standardized_residuals(X, Y, fit)


# Property checks: the same invariants run at 1000 trials in the acceptance suite.

@settings(max_examples=60, deadline=None)
@given(st.integers(3, 40), st.integers(0, 2**32 - 1))
def test_intercept_fit_equals_median_oracle(n, seed):
    y = np.random.default_rng(seed).standard_normal(n)
    fit = fit_median_regression(np.ones((n, 1)), y)
    assert abs(fit.objective - brute_force_median_objective(y)) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_anova_fit_equals_group_medians(p, r, seed):
    y = np.random.default_rng(seed).laplace(size=p * r)
    fit = fit_median_regression(gen_anova_design(p, r), y)
    groups = [y[g * r : (g + 1) * r] for g in range(p)]
    assert abs(fit.objective - group_median_objective(groups)) <= 1e-9


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_criterion_convex(seed, lam):
    g = np.random.default_rng(seed)
    X = g.standard_normal((25, 3))
    Y = g.standard_normal(25)
    b1, b2 = g.standard_normal(3), g.standard_normal(3)
    lhs = mad_criterion(X, Y, lam * b1 + (1 - lam) * b2)
    rhs = lam * mad_criterion(X, Y, b1) + (1 - lam) * mad_criterion(X, Y, b2)
    assert lhs <= rhs + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([-3.0, 0.5, 7.0]))
def test_fit_scale_and_shift_equivariance(seed, c):
    g = np.random.default_rng(seed)
    X = g.standard_normal((30, 3))
    Y = g.laplace(size=30)
    base = fit_median_regression(X, Y).objective
    assert fit_median_regression(X, c * Y).objective == pytest.approx(abs(c) * base, abs=1e-9)
    delta = g.standard_normal(3)
    assert fit_median_regression(X, Y + X @ delta).objective == pytest.approx(base, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_fit_dominates_probes(seed):
    g = np.random.default_rng(seed)
    X = g.standard_normal((30, 3))
    Y = g.standard_normal(30)
    fit = fit_median_regression(X, Y)
    for b in [np.zeros(3), *g.standard_normal((20, 3)), fit.beta_hat + 1e-3 * g.standard_normal(3)]:
        assert fit.objective <= mad_criterion(X, Y, b) + 1e-9
