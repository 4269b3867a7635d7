"""Law-invariant risk form evaluators and a randomized axiom checker.

Four spec variants are supported: plain expectation, Average Value at Risk,
finite Kusuoka mixtures of AVaR levels, and families of piecewise-linear
distortion (dual utility) functions.  The supremum over a convex set in the
mixture and distortion representations is realized as a max over finitely
many user-supplied generators: the objective is linear in the generator, so
the sup over the convex hull is attained at one of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import DomainError, ValidationError
from .model import (
    VALUE_ATOL,
    PROB_ATOL,
    FiniteModel,
    icx_compare,
    law_equivalent,
    quantile_function,
)


@dataclass(frozen=True)
class Expectation:
    """The bilinear form: plain expected value."""


@dataclass(frozen=True)
class AVaR:
    """Average Value at Risk at level ``alpha``.

    ``alpha = 0`` is the essential supremum, ``alpha = 1`` the expectation.
    """

    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError(f"AVaR level must lie in [0, 1], got {self.alpha!r}")


@dataclass(frozen=True)
class KusuokaMixture:
    """Max over mixtures of AVaR levels.

    Each mixture is a tuple of ``(level, weight)`` pairs with levels in
    [0, 1], nonnegative weights summing to 1.
    """

    mixtures: tuple[tuple[tuple[float, float], ...], ...]

    def __post_init__(self):
        mixtures = tuple(tuple((float(s), float(w)) for s, w in mix) for mix in self.mixtures)
        if not mixtures:
            raise ValidationError("mixture list must be nonempty")
        for mix in mixtures:
            if not mix:
                raise ValidationError("each mixture needs at least one level")
            for s, w in mix:
                if not 0.0 <= s <= 1.0:
                    raise ValidationError(f"mixture level must lie in [0, 1], got {s!r}")
                if w < 0.0:
                    raise ValidationError(f"mixture weight must be nonnegative, got {w!r}")
            total = sum(w for _, w in mix)
            if abs(total - 1.0) > PROB_ATOL:
                raise ValidationError(f"mixture weights must sum to 1, got {total!r}")
        object.__setattr__(self, "mixtures", mixtures)


@dataclass(frozen=True)
class PiecewiseLinear:
    """Piecewise-linear function on [0, 1] given by ``(p, value)`` breakpoints.

    Breakpoints must start at p=0, end at p=1, be strictly increasing in p,
    and nondecreasing in value.  Convexity is tracked but not required here;
    see :class:`Distortion`.
    """

    breakpoints: tuple[tuple[float, float], ...]
    convex: bool = field(init=False)

    def __post_init__(self):
        bps = tuple((float(p), float(v)) for p, v in self.breakpoints)
        if len(bps) < 2:
            raise ValidationError("need at least two breakpoints")
        if bps[0][0] != 0.0 or bps[-1][0] != 1.0:
            raise ValidationError("breakpoints must span [0, 1]")
        ps = [p for p, _ in bps]
        vs = [v for _, v in bps]
        if any(b <= a for a, b in zip(ps, ps[1:])):
            raise ValidationError("breakpoint abscissae must be strictly increasing")
        if any(b < a for a, b in zip(vs, vs[1:])):
            raise ValidationError("breakpoint values must be nondecreasing")
        slopes = [(v1 - v0) / (p1 - p0) for (p0, v0), (p1, v1) in zip(bps, bps[1:])]
        convex = all(s1 >= s0 - PROB_ATOL for s0, s1 in zip(slopes, slopes[1:]))
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "convex", convex)

    def __call__(self, p: float) -> float:
        xs = [x for x, _ in self.breakpoints]
        ys = [y for _, y in self.breakpoints]
        return float(np.interp(p, xs, ys))


def avar_distortion(alpha: float) -> PiecewiseLinear:
    """The distortion function whose Stieltjes integral reproduces AVaR."""
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha!r}")
    if alpha == 1.0:
        return PiecewiseLinear(((0.0, 0.0), (1.0, 1.0)))
    return PiecewiseLinear(((0.0, 0.0), (1.0 - alpha, 0.0), (1.0, 1.0)))


@dataclass(frozen=True)
class Distortion:
    """Max over a family of distortion functions of the quantile integral.

    A distortion must map 0 to 0 and 1 to 1; convexity of every member is
    part of the spec's validity contract and is enforced by
    :func:`validate_form` (and hence by :func:`evaluate`), but not at
    construction, so that the axiom checker can probe non-convex candidates.
    """

    family: tuple[PiecewiseLinear, ...]

    def __post_init__(self):
        family = tuple(self.family)
        if not family:
            raise ValidationError("distortion family must be nonempty")
        for w in family:
            if abs(w.breakpoints[0][1]) > PROB_ATOL or abs(w.breakpoints[-1][1] - 1.0) > PROB_ATOL:
                raise ValidationError("distortion must satisfy w(0) = 0 and w(1) = 1")
        object.__setattr__(self, "family", family)


RiskFormSpec = Union[Expectation, AVaR, KusuokaMixture, Distortion]


def validate_form(f: RiskFormSpec) -> None:
    """Reject specs outside the validity contract (currently: non-convex
    distortion members; all other invariants hold by construction)."""
    if isinstance(f, Distortion):
        for i, w in enumerate(f.family):
            if not w.convex:
                raise ValidationError(f"distortion family member {i} is not convex")
    elif not isinstance(f, (Expectation, AVaR, KusuokaMixture)):
        raise ValidationError(f"not a risk form spec: {f!r}")


def describe(f: RiskFormSpec) -> str:
    if isinstance(f, Expectation):
        return "expectation"
    if isinstance(f, AVaR):
        return f"avar({f.alpha:g})"
    if isinstance(f, KusuokaMixture):
        return f"kusuoka({len(f.mixtures)} mixtures)"
    if isinstance(f, Distortion):
        return f"distortion({len(f.family)} functions)"
    return repr(f)


# ---------------------------------------------------------------------------
# evaluators
# ---------------------------------------------------------------------------

def expectation(m: FiniteModel) -> float:
    return float(m.probs @ m.values)


def avar(m: FiniteModel, alpha: float) -> float:
    """Average Value at Risk from the exact step-quantile integral:
    (1/alpha) * integral of the quantile over (1-alpha, 1]."""
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha!r}")
    if alpha == 1.0:
        return expectation(m)
    qf = quantile_function(m)
    if alpha == 0.0:
        return qf.steps[-1][1]
    lo = 1.0 - alpha
    acc = 0.0
    prev = 0.0
    for c, v in qf.steps:
        seg = min(c, 1.0) - max(prev, lo)
        if seg > 0.0:
            acc += v * seg
        prev = c
    return acc / alpha


def avar_min_formula(m: FiniteModel, alpha: float) -> float:
    """Independent route to AVaR: minimize eta + (1/alpha) E[(Z - eta)_+].

    The objective is piecewise linear in eta with kinks only at the atoms,
    so scanning the distinct values of ``m`` attains the minimum.
    """
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha!r}")
    best = np.inf
    for eta in np.unique(m.values):
        obj = eta + float(m.probs @ np.clip(m.values - eta, 0.0, None)) / alpha
        if obj < best:
            best = obj
    return float(best)


def kusuoka_evaluate(mixtures, m: FiniteModel) -> float:
    """Max over mixtures of the weighted AVaR combination."""
    mixtures = tuple(mixtures)
    if not mixtures:
        raise ValidationError("mixture list must be nonempty")
    return max(sum(w * avar(m, s) for s, w in mix) for mix in mixtures)


def distortion_evaluate(family, m: FiniteModel) -> float:
    """Max over the family of the exact Stieltjes integral of the step
    quantile against dw."""
    family = tuple(family)
    if not family:
        raise ValidationError("distortion family must be nonempty")
    steps = quantile_function(m).steps
    best = -np.inf
    for w in family:
        prev = 0.0
        acc = 0.0
        for c, v in steps:
            acc += v * (w(c) - w(prev))
            prev = c
        best = max(best, acc)
    return float(best)


def evaluate(f: RiskFormSpec, m: FiniteModel, validate: bool = True) -> float:
    """Evaluate a risk form spec on a model.

    With ``validate=True`` (the default) the spec is checked against the
    full validity contract first.
    """
    if validate:
        validate_form(f)
    if isinstance(f, Expectation):
        return expectation(m)
    if isinstance(f, AVaR):
        return avar(m, f.alpha)
    if isinstance(f, KusuokaMixture):
        return kusuoka_evaluate(f.mixtures, m)
    if isinstance(f, Distortion):
        return distortion_evaluate(f.family, m)
    raise ValidationError(f"not a risk form spec: {f!r}")


# ---------------------------------------------------------------------------
# randomized axiom checking
# ---------------------------------------------------------------------------

AXIOM_NAMES = (
    "monotonicity",
    "normalization",
    "translation_equivariance",
    "positive_homogeneity",
    "law_invariance",
    "icx_consistency",
)


@dataclass(frozen=True)
class Violation:
    axiom: str
    detail: str
    witness: dict


@dataclass(frozen=True)
class AxiomReport:
    form: str
    trials: int
    violation: Violation | None

    @property
    def ok(self) -> bool:
        return self.violation is None

    def summary(self) -> str:
        if self.ok:
            return f"{self.form}: no violation in {self.trials} trials"
        v = self.violation
        return f"{self.form}: {v.axiom} violated ({v.detail})"


def _model_witness(m: FiniteModel) -> dict:
    return {"values": m.values.tolist(), "probs": m.probs.tolist()}


def _random_model(rng: np.random.Generator, max_size: int = 6) -> FiniteModel:
    # small supports and bounded values keep counterexamples readable
    n = int(rng.integers(1, max_size + 1))
    values = rng.uniform(-10.0, 10.0, size=n)
    w = rng.uniform(0.05, 1.0, size=n)
    return FiniteModel(values, w / w.sum())


def _icx_pair(rng: np.random.Generator) -> tuple[FiniteModel, FiniteModel] | None:
    """A pair guaranteed (or verified) to satisfy the increasing convex order."""
    kind = int(rng.integers(4))
    if kind == 0:
        # outcome-wise dominance with shared probabilities
        m = _random_model(rng)
        return m, FiniteModel(m.values + rng.uniform(0.0, 3.0, size=len(m)), m.probs)
    if kind == 1:
        # Jensen: a point mass at the mean is icx-dominated by the model
        m = _random_model(rng)
        return FiniteModel.dirac(expectation(m)), m
    if kind == 2:
        # mean-preserving spread of one atom
        m = _random_model(rng)
        i = int(rng.integers(len(m)))
        d = float(rng.uniform(0.0, 2.0))
        values = np.concatenate([m.values, [m.values[i] + d]])
        probs = np.concatenate([m.probs, [m.probs[i] / 2.0]])
        probs[i] /= 2.0
        values[i] -= d
        return m, FiniteModel(values, probs)
    # random pair, kept only when the order verifiably holds
    a, b = _random_model(rng), _random_model(rng)
    return (a, b) if icx_compare(a, b, tol=1e-12) else None


def check_axioms(
    f: RiskFormSpec,
    trials: int,
    seed: int = 0,
    tol: float = VALUE_ATOL,
) -> AxiomReport:
    """Randomized search for violations of the risk-form axioms.

    Checks monotonicity, normalization, translation equivariance, positive
    homogeneity, law invariance, and consistency with the increasing convex
    order.  Returns the first counterexample found, or a clean report after
    ``trials`` rounds.  Deterministic for a given seed.
    """
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials!r}")
    rng = np.random.default_rng(seed)
    name = describe(f)

    for trial in range(trials):
        m = _random_model(rng)
        base = evaluate(f, m, validate=False)

        shift = rng.uniform(0.0, 3.0, size=len(m))
        bigger = evaluate(f, FiniteModel(m.values + shift, m.probs), validate=False)
        if base > bigger + tol:
            return AxiomReport(name, trial + 1, Violation(
                "monotonicity",
                f"rho={base!r} exceeds rho={bigger!r} after outcome-wise increase",
                {"model": _model_witness(m), "shift": shift.tolist()},
            ))

        zero = evaluate(f, FiniteModel(np.zeros(len(m)), m.probs), validate=False)
        if abs(zero) > tol:
            return AxiomReport(name, trial + 1, Violation(
                "normalization",
                f"rho[0, P] = {zero!r}",
                {"probs": m.probs.tolist()},
            ))

        a = float(rng.uniform(-5.0, 5.0))
        shifted = evaluate(f, FiniteModel(m.values + a, m.probs), validate=False)
        if abs(shifted - (base + a)) > tol:
            return AxiomReport(name, trial + 1, Violation(
                "translation_equivariance",
                f"rho[Z+{a!r}] = {shifted!r}, expected {base + a!r}",
                {"model": _model_witness(m), "a": a},
            ))

        beta = float(rng.uniform(0.0, 3.0))
        scaled = evaluate(f, FiniteModel(beta * m.values, m.probs), validate=False)
        if abs(scaled - beta * base) > tol:
            return AxiomReport(name, trial + 1, Violation(
                "positive_homogeneity",
                f"rho[{beta!r}*Z] = {scaled!r}, expected {beta * base!r}",
                {"model": _model_witness(m), "beta": beta},
            ))

        perm = rng.permutation(len(m))
        i = int(rng.integers(len(m)))
        split_values = np.concatenate([m.values, [m.values[i]]])
        split_probs = np.concatenate([m.probs, [m.probs[i] / 2.0]])
        split_probs[i] /= 2.0
        for twin in (
            FiniteModel(m.values[perm], m.probs[perm]),
            FiniteModel(split_values, split_probs),
        ):
            other = evaluate(f, twin, validate=False)
            if abs(other - base) > tol:
                return AxiomReport(name, trial + 1, Violation(
                    "law_invariance",
                    f"law-equivalent models evaluate to {base!r} and {other!r}",
                    {"model": _model_witness(m), "twin": _model_witness(twin)},
                ))

        pair = _icx_pair(rng)
        if pair is not None:
            lo, hi = pair
            v_lo = evaluate(f, lo, validate=False)
            v_hi = evaluate(f, hi, validate=False)
            if v_lo > v_hi + tol:
                return AxiomReport(name, trial + 1, Violation(
                    "icx_consistency",
                    f"icx-dominated model evaluates to {v_lo!r} > {v_hi!r}",
                    {"smaller": _model_witness(lo), "larger": _model_witness(hi)},
                ))

    return AxiomReport(name, trials, None)
