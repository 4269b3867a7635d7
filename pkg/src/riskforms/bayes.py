"""Controlled observation kernels and the discrete Bayes operator.

A first-stage control selects an observation channel: per control, a matrix
of conditional observation probabilities K(x | y, u1).  Together with a prior
over the unobserved coordinate this determines the observation marginal and,
by disintegration in the opposite direction, the posterior kernel.

Posteriors at observations of zero marginal mass are set to the uniform
distribution and flagged.  Such observations never occur under the induced
marginal, so no downstream result on reachable observations depends on the
choice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .model import PROB_ATOL


@dataclass(frozen=True, eq=False)
class Prior:
    """Probability vector over the unobserved coordinate."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(np.asarray(self.probs, dtype=float), copy=True)
        if probs.ndim != 1 or len(probs) == 0:
            raise ValidationError("prior must be a nonempty vector")
        if np.any(probs < 0.0):
            raise ValidationError("prior entries must be nonnegative")
        mass = float(probs.sum())
        if abs(mass - 1.0) > PROB_ATOL:
            raise ValidationError(f"prior must have mass 1, got {mass!r}")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    def __len__(self) -> int:
        return len(self.probs)


@dataclass(frozen=True, eq=False)
class ControlledKernel:
    """Per-control observation matrices, indexed [u1, y, x]; each row over x
    is a probability vector."""

    matrices: np.ndarray

    def __post_init__(self):
        matrices = np.array(np.asarray(self.matrices, dtype=float), copy=True)
        if matrices.ndim != 3:
            raise ValidationError(
                f"kernel must be a (controls, y, x) array, got ndim {matrices.ndim}"
            )
        if np.any(matrices < 0.0):
            raise ValidationError("kernel entries must be nonnegative")
        sums = matrices.sum(axis=2)
        if np.any(np.abs(sums - 1.0) > PROB_ATOL):
            u1, y = np.argwhere(np.abs(sums - 1.0) > PROB_ATOL)[0]
            raise ValidationError(
                f"kernel row (u1={u1}, y={y}) has mass {sums[u1, y]!r}"
            )
        matrices.setflags(write=False)
        object.__setattr__(self, "matrices", matrices)

    @property
    def u1_count(self) -> int:
        return self.matrices.shape[0]

    @property
    def y_size(self) -> int:
        return self.matrices.shape[1]

    @property
    def x_size(self) -> int:
        return self.matrices.shape[2]


def _check_control(ck: ControlledKernel, u1: int) -> None:
    if not 0 <= u1 < ck.u1_count:
        raise DomainError(f"control index {u1!r} outside [0, {ck.u1_count})")


def observation_marginal(prior: Prior, ck: ControlledKernel, u1: int) -> np.ndarray:
    """Distribution of the observation under the given control: the prior
    mixture of the kernel rows."""
    _check_control(ck, u1)
    if len(prior) != ck.y_size:
        raise ValidationError(
            f"prior length {len(prior)} does not match kernel y-size {ck.y_size}"
        )
    return prior.probs @ ck.matrices[u1]


def bayes_posterior(
    prior: Prior, ck: ControlledKernel, u1: int, x: int
) -> tuple[np.ndarray, bool]:
    """Posterior over the unobserved coordinate after observing ``x``.

    Returns the posterior vector and a degeneracy flag; the flag is raised
    exactly when the observation has zero marginal mass, in which case the
    posterior is the uniform distribution.
    """
    _check_control(ck, u1)
    if not 0 <= x < ck.x_size:
        raise DomainError(f"observation index {x!r} outside [0, {ck.x_size})")
    if len(prior) != ck.y_size:
        raise ValidationError(
            f"prior length {len(prior)} does not match kernel y-size {ck.y_size}"
        )
    weights = prior.probs * ck.matrices[u1, :, x]
    denom = float(weights.sum())
    if denom == 0.0:
        return np.full(len(prior), 1.0 / len(prior)), True
    return weights / denom, False
