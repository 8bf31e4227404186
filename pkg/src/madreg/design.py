"""Design matrices for the median regression model."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from madreg.distributions import make_rng
from madreg.errors import InvalidDimensionsError


class DesignKind(str, enum.Enum):
    NORMAL = "normal"
    ANOVA = "anova"

    @classmethod
    def from_token(cls, token: str) -> "DesignKind":
        try:
            return cls(token.strip().lower())
        except ValueError:
            choices = ", ".join(d.value for d in cls)
            raise ValueError(f"unknown design kind {token!r}; expected one of {choices}") from None


@dataclass(frozen=True)
class DesignMatrix:
    """An immutable n x p covariate matrix tagged with how it was built."""

    entries: np.ndarray
    kind: DesignKind

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if entries.ndim != 2:
            raise InvalidDimensionsError(f"design must be 2-dimensional, got shape {entries.shape}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def p(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)


def as_array(X) -> np.ndarray:
    """Return the raw float matrix behind ``X`` (a DesignMatrix or array-like)."""
    if isinstance(X, DesignMatrix):
        return X.entries
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr


def with_intercept(X) -> np.ndarray:
    arr = as_array(X)
    return np.column_stack([np.ones(arr.shape[0]), arr])


def gen_normal_design(n: int, p: int, seed) -> DesignMatrix:
    """n x p matrix of i.i.d. N(0, 1) entries, deterministic given ``seed``."""
    if p < 1 or n < p:
        raise InvalidDimensionsError(f"need n >= p >= 1, got n={n}, p={p}")
    rng = make_rng(seed)
    return DesignMatrix(rng.standard_normal((n, p)), DesignKind.NORMAL)


def gen_anova_design(p: int, replicates_per_group: int) -> DesignMatrix:
    """Balanced dummy design: ``replicates_per_group`` consecutive rows per group.

    >>> gen_anova_design(2, 2).entries.tolist()
    [[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]
    """
    if p < 1 or replicates_per_group < 1:
        raise InvalidDimensionsError(
            f"need p >= 1 and replicates_per_group >= 1, got p={p}, replicates_per_group={replicates_per_group}"
        )
    entries = np.repeat(np.eye(p), replicates_per_group, axis=0)
    return DesignMatrix(entries, DesignKind.ANOVA)
