"""Finite probabilistic models and their distribution machinery.

A :class:`FiniteModel` pairs outcome values with probabilities on a finite
space.  :class:`QuantileFunction` is the canonical sorted-step representation
every risk evaluator works from; law equivalence and the increasing convex
order are defined on top of it.

All operations are pure functions of immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError

#: Default absolute tolerance for comparing outcome values.
VALUE_ATOL = 1e-9

#: Absolute tolerance for probability-mass checks and step-boundary lookups.
PROB_ATOL = 1e-12


def _readonly_vector(data, name: str) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {arr.shape}")
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FiniteModel:
    """Outcome values with probabilities on a finite space.

    Zero-probability atoms are legal and retained in storage; the quantile
    machinery ignores them, so they never influence any risk evaluation.
    """

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        values = _readonly_vector(self.values, "values")
        probs = _readonly_vector(self.probs, "probs")
        if len(values) != len(probs):
            raise ValidationError(
                f"values and probs must have equal length, got {len(values)} and {len(probs)}"
            )
        if len(values) == 0:
            raise ValidationError("a model needs at least one atom")
        if not np.all(np.isfinite(values)):
            raise ValidationError("values must be finite")
        if np.any(probs < 0.0):
            raise ValidationError("probabilities must be nonnegative")
        mass = float(probs.sum())
        if abs(mass - 1.0) > PROB_ATOL:
            raise ValidationError(f"probabilities must sum to 1, got {mass!r}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def dirac(cls, value: float) -> "FiniteModel":
        """Point mass at ``value``."""
        return cls(np.array([float(value)]), np.array([1.0]))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def support_values(self) -> np.ndarray:
        """Values carrying strictly positive probability."""
        return self.values[self.probs > 0.0]


@dataclass(frozen=True, eq=False)
class QuantileFunction:
    """Left-continuous step quantile function on (0, 1].

    ``steps`` is a tuple of ``(cum_prob, value)`` pairs with strictly
    increasing cumulative probabilities ending at 1 and nondecreasing values.
    Evaluation at ``p`` returns the value of the first step whose cumulative
    probability reaches ``p``.
    """

    steps: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.steps:
            raise ValidationError("a quantile function needs at least one step")
        prev_c = 0.0
        prev_v = -np.inf
        for c, v in self.steps:
            if c <= prev_c:
                raise ValidationError("cumulative probabilities must be strictly increasing")
            if v < prev_v:
                raise ValidationError("step values must be nondecreasing")
            prev_c, prev_v = c, v
        if self.steps[-1][0] != 1.0:
            raise ValidationError("last cumulative probability must be exactly 1")

    def __call__(self, p: float) -> float:
        if not 0.0 < p <= 1.0:
            raise DomainError(f"quantile level must lie in (0, 1], got {p!r}")
        for c, v in self.steps:
            if c >= p - PROB_ATOL:
                return v
        return self.steps[-1][1]  # unreachable: last step has cum_prob 1


def distribution_function(m: FiniteModel, z: float) -> float:
    """Probability of the outcome not exceeding ``z``."""
    # summation noise can leave the nominal [0, 1] range by a few ulp
    return float(min(max(m.probs[m.values <= z].sum(), 0.0), 1.0))


def quantile_function(m: FiniteModel) -> QuantileFunction:
    """Canonical step representation: sorted by value, equal values merged,
    zero-probability atoms dropped, total mass pinned to exactly 1."""
    mask = m.probs > 0.0
    values = m.values[mask]
    probs = m.probs[mask]
    order = np.argsort(values, kind="stable")
    values = values[order]
    probs = probs[order]

    merged_values: list[float] = []
    merged_probs: list[float] = []
    for v, p in zip(values.tolist(), probs.tolist()):
        if merged_values and v == merged_values[-1]:
            merged_probs[-1] += p
        else:
            merged_values.append(v)
            merged_probs.append(p)

    cum = np.cumsum(merged_probs)
    cum[-1] = 1.0
    return QuantileFunction(tuple(zip(cum.tolist(), merged_values)))


def quantile(m: FiniteModel, p: float) -> float:
    """Generalized inverse of the distribution function: the smallest value
    whose cumulative probability reaches ``p``."""
    return quantile_function(m)(p)


def law_equivalent(m1: FiniteModel, m2: FiniteModel, tol: float = VALUE_ATOL) -> bool:
    """Whether the two models induce the same distribution, compared
    step-for-step on the canonical quantile representation."""
    s1 = quantile_function(m1).steps
    s2 = quantile_function(m2).steps
    if len(s1) != len(s2):
        return False
    for (c1, v1), (c2, v2) in zip(s1, s2):
        if abs(c1 - c2) > tol or abs(v1 - v2) > tol:
            return False
    return True


def _integrated_tail(m: FiniteModel, eta: float) -> float:
    """Expected excess over the threshold, E[(Z - eta)_+]."""
    return float(m.probs @ np.clip(m.values - eta, 0.0, None))


def icx_compare(m1: FiniteModel, m2: FiniteModel, tol: float = VALUE_ATOL) -> bool:
    """Increasing convex order: every integrated tail of ``m1`` is dominated
    by the one of ``m2``.

    The integrated-tail functions are piecewise linear and convex, so the
    pointwise comparison over all thresholds reduces to the kinks of the
    dominating side (the support of ``m2``) plus one threshold below both
    supports, which compares the means.
    """
    support2 = m2.support_values
    etas = np.unique(support2).tolist()
    etas.append(min(float(m1.support_values.min()), float(support2.min())) - 1.0)
    for eta in etas:
        if _integrated_tail(m1, eta) > _integrated_tail(m2, eta) + tol:
            return False
    return True
