import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from madreg.design import DesignKind, DesignMatrix, gen_anova_design, gen_normal_design, with_intercept
from madreg.errors import InvalidDimensionsError


def test_normal_design_deterministic():
    a = gen_normal_design(100, 5, seed=3)
    b = gen_normal_design(100, 5, seed=3)
    assert np.array_equal(a.entries, b.entries)
    assert a.kind is DesignKind.NORMAL
    assert (a.n, a.p) == (100, 5)


def test_normal_design_column_means():
    X = gen_normal_design(10**4, 3, seed=11)
    assert np.all(np.abs(X.entries.mean(axis=0)) <= 0.05)
    assert np.linalg.matrix_rank(X.entries) == 3


@pytest.mark.parametrize("n,p", [(2, 5), (5, 0), (0, 0)])
def test_normal_design_invalid(n, p):
    with pytest.raises(InvalidDimensionsError):
        gen_normal_design(n, p, seed=1)


def test_anova_small():
    X = gen_anova_design(2, 2)
    assert X.entries.tolist() == [[1, 0], [1, 0], [0, 1], [0, 1]]
    assert X.kind is DesignKind.ANOVA


def test_anova_intercept_only():
    assert gen_anova_design(1, 3).entries.tolist() == [[1.0], [1.0], [1.0]]


@pytest.mark.parametrize("p,r", [(0, 3), (3, 0)])
def test_anova_invalid(p, r):
    with pytest.raises(InvalidDimensionsError):
        gen_anova_design(p, r)


@given(st.integers(1, 12), st.integers(1, 12))
def test_anova_sums(p, r):
    X = gen_anova_design(p, r).entries
    assert X.shape == (p * r, p)
    assert np.all(X.sum(axis=1) == 1)
    assert np.all(X.sum(axis=0) == r)
    assert set(np.unique(X)) <= {0.0, 1.0}


def test_design_is_immutable():
    X = gen_anova_design(2, 2)
    with pytest.raises(ValueError):
        X.entries[0, 0] = 5.0


def test_intercept_column():
    X = with_intercept(gen_normal_design(4, 2, seed=0))
    assert X.shape == (4, 3)
    assert np.all(X[:, 0] == 1.0)


def test_design_matrix_rejects_vector():
    with pytest.raises(InvalidDimensionsError):
        DesignMatrix(np.ones(3), DesignKind.NORMAL)
