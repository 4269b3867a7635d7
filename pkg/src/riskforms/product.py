"""Risk on product spaces: disintegration and composite evaluation.

A joint law on a finite product space factors into a marginal and a
transition kernel.  A composite form pairs a marginal risk form with
per-point conditional forms and evaluates through that factorization:
conditional risk per first-coordinate point, then the marginal form of the
resulting value vector.  Multi-space models are handled by recursive
two-space disintegration in a fixed coordinate order.

Rows of the kernel at zero-marginal points are set to the uniform
distribution and flagged.  Every downstream result is invariant to that
choice because zero-probability atoms never enter any evaluation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import DomainError, ValidationError
from .forms import AVaR, Expectation, RiskFormSpec, describe, evaluate, validate_form
from .model import PROB_ATOL, VALUE_ATOL, FiniteModel


def _readonly(a, name: str, ndim: int) -> np.ndarray:
    arr = np.array(np.asarray(a, dtype=float), copy=True)
    if arr.ndim != ndim:
        raise ValidationError(f"{name} must have {ndim} dimensions, got {arr.ndim}")
    arr.setflags(write=False)
    return arr


def _check_mass(arr: np.ndarray, name: str) -> None:
    if np.any(arr < 0.0):
        raise ValidationError(f"{name} entries must be nonnegative")
    mass = float(arr.sum())
    if abs(mass - 1.0) > PROB_ATOL:
        raise ValidationError(f"{name} must have total mass 1, got {mass!r}")


@dataclass(frozen=True, eq=False)
class ProductModel:
    """Cost matrix and joint law on a finite two-space product."""

    cost: np.ndarray
    joint: np.ndarray

    def __post_init__(self):
        cost = _readonly(self.cost, "cost", 2)
        joint = _readonly(self.joint, "joint", 2)
        if cost.shape != joint.shape:
            raise ValidationError(
                f"cost shape {cost.shape} and joint shape {joint.shape} disagree"
            )
        if not np.all(np.isfinite(cost)):
            raise ValidationError("cost entries must be finite")
        _check_mass(joint, "joint")
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "joint", joint)

    @property
    def x_size(self) -> int:
        return self.cost.shape[0]

    @property
    def y_size(self) -> int:
        return self.cost.shape[1]


@dataclass(frozen=True, eq=False)
class Kernel:
    """Transition kernel: one probability row over the second space per
    first-space point.  ``degenerate_rows`` lists rows that were invented
    (uniform) because the source had no mass there."""

    rows: np.ndarray
    degenerate_rows: tuple[int, ...] = ()

    def __post_init__(self):
        rows = _readonly(self.rows, "kernel rows", 2)
        if np.any(rows < 0.0):
            raise ValidationError("kernel entries must be nonnegative")
        sums = rows.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > PROB_ATOL)
        if bad.size:
            raise ValidationError(f"kernel row {bad[0]} has mass {sums[bad[0]]!r}")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "degenerate_rows", tuple(int(i) for i in self.degenerate_rows))

    @property
    def x_size(self) -> int:
        return self.rows.shape[0]

    @property
    def y_size(self) -> int:
        return self.rows.shape[1]


def kernel_product(marginal, kernel: Kernel) -> np.ndarray:
    """Joint matrix of marginal-times-kernel, entry [x, y] = m[x] * rows[x, y]."""
    m = np.asarray(marginal, dtype=float)
    return m[:, None] * kernel.rows


@dataclass(frozen=True)
class CompositeForm:
    """Marginal form plus conditional forms, one per first-space point or a
    single spec shared by all points."""

    marginal: RiskFormSpec
    conditional: Union[RiskFormSpec, tuple[RiskFormSpec, ...]]

    def conditional_at(self, x: int, x_size: int) -> RiskFormSpec:
        if isinstance(self.conditional, tuple):
            if len(self.conditional) != x_size:
                raise ValidationError(
                    f"per-point conditional list has length {len(self.conditional)}, "
                    f"expected {x_size}"
                )
            return self.conditional[x]
        return self.conditional

    def validate(self, x_size: int) -> None:
        validate_form(self.marginal)
        specs = self.conditional if isinstance(self.conditional, tuple) else (self.conditional,)
        if isinstance(self.conditional, tuple) and len(self.conditional) != x_size:
            raise ValidationError(
                f"per-point conditional list has length {len(self.conditional)}, "
                f"expected {x_size}"
            )
        for spec in specs:
            validate_form(spec)

    def describe(self) -> str:
        if isinstance(self.conditional, tuple):
            inner = ",".join(describe(s) for s in self.conditional)
        else:
            inner = describe(self.conditional)
        return f"{describe(self.marginal)} o [{inner}]"


def disintegrate(pm: ProductModel) -> tuple[np.ndarray, Kernel]:
    """Factor the joint law into its first-space marginal and a kernel.

    Reconstruction ``marginal x kernel`` reproduces the joint on rows with
    positive mass; zero-mass rows get the uniform distribution and are
    flagged on the kernel.
    """
    marginal = pm.joint.sum(axis=1)
    rows = np.empty_like(pm.joint)
    degenerate = []
    for x in range(pm.x_size):
        if marginal[x] > 0.0:
            rows[x] = pm.joint[x] / marginal[x]
        else:
            rows[x] = 1.0 / pm.y_size
            degenerate.append(x)
    return marginal, Kernel(rows, tuple(degenerate))


def conditional_operator(cf: CompositeForm, cost, kernel: Kernel) -> np.ndarray:
    """Vector of conditional risk values: entry x evaluates the conditional
    form at x on the model (cost row x, kernel row x)."""
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2 or cost.shape != kernel.rows.shape:
        raise ValidationError(
            f"cost shape {cost.shape} does not match kernel shape {kernel.rows.shape}"
        )
    n = kernel.x_size
    return np.array([
        evaluate(cf.conditional_at(x, n), FiniteModel(cost[x], kernel.rows[x]))
        for x in range(n)
    ])


def composite_evaluate(cf: CompositeForm, pm: ProductModel) -> float:
    """The risk disintegration route: disintegrate, apply the conditional
    operator, then the marginal form on the resulting value vector."""
    marginal, kernel = disintegrate(pm)
    conditional = conditional_operator(cf, pm.cost, kernel)
    return evaluate(cf.marginal, FiniteModel(conditional, marginal))


# ---------------------------------------------------------------------------
# conditional-consistency falsifier
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConsistencyReport:
    form: str
    trials: int
    counterexample: dict | None

    @property
    def ok(self) -> bool:
        return self.counterexample is None

    def summary(self) -> str:
        if self.ok:
            return f"{self.form}: no violation in {self.trials} trials"
        return f"{self.form}: conditional consistency violated"


def _random_kernel(rng: np.random.Generator, nx: int, ny: int) -> Kernel:
    w = rng.uniform(0.05, 1.0, size=(nx, ny))
    return Kernel(w / w.sum(axis=1, keepdims=True))


def consistency_search(
    cf: CompositeForm,
    trials: int,
    seed: int = 0,
    x_size: int = 3,
    y_size: int = 3,
    tol: float = VALUE_ATOL,
) -> ConsistencyReport:
    """Randomized falsifier for conditional consistency.

    Each trial builds a quadruple (Z, Z', Q, Q') whose conditional value
    vectors are pointwise ordered, then tests the composite on products with
    sampled first-space marginals.  A clean report is evidence, not proof:
    the property is universally quantified and cannot be certified by
    sampling.  Composites with a monotonic marginal never violate it.
    """
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials!r}")
    cf.validate(x_size)
    rng = np.random.default_rng(seed)

    for _ in range(trials):
        z = rng.uniform(-5.0, 5.0, size=(x_size, y_size))
        q = _random_kernel(rng, x_size, y_size)
        if rng.integers(2):
            # outcome-wise lift over the same kernel
            q2 = q
            z2 = z + rng.uniform(0.0, 3.0, size=(x_size, y_size))
        else:
            # unrelated pair, shifted until the conditional premise holds;
            # translation equivariance moves the value vector by the shift
            q2 = _random_kernel(rng, x_size, y_size)
            z2 = rng.uniform(-5.0, 5.0, size=(x_size, y_size))
        v = conditional_operator(cf, z, q)
        v2 = conditional_operator(cf, z2, q2)
        gap = float(np.max(v - v2))
        if gap > 0.0:
            z2 = z2 + gap + 1e-9
            v2 = conditional_operator(cf, z2, q2)
        if np.any(v > v2):
            continue  # premise still failed at float precision; skip trial

        lambdas = [np.full(x_size, 1.0 / x_size), rng.dirichlet(np.ones(x_size))]
        e = np.zeros(x_size)
        e[rng.integers(x_size)] = 1.0
        lambdas.append(e)
        for lam in lambdas:
            lhs = composite_evaluate(cf, ProductModel(z, kernel_product(lam, q)))
            rhs = composite_evaluate(cf, ProductModel(z2, kernel_product(lam, q2)))
            if lhs > rhs + tol:
                return ConsistencyReport(cf.describe(), trials, {
                    "cost_lo": z.tolist(),
                    "cost_hi": z2.tolist(),
                    "kernel_lo": q.rows.tolist(),
                    "kernel_hi": q2.rows.tolist(),
                    "lambda": lam.tolist(),
                    "lhs": lhs,
                    "rhs": rhs,
                })
    return ConsistencyReport(cf.describe(), trials, None)


# ---------------------------------------------------------------------------
# product-space law invariance fails: the classic two-coordinate example
# ---------------------------------------------------------------------------

def law_invariance_product_counterexample(alpha: float, n: int) -> tuple[float, float]:
    """Composite mean-of-AVaR values for the two cost functions x and y on
    the uniform n-by-n grid over the unit square.

    Both probabilistic models share one distribution (uniform on the grid
    midpoints), yet the composite assigns 1/2 to the first and 1 - alpha/2
    to the second; the gap closes only at alpha = 1.
    """
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha!r}")
    if n < 2:
        raise DomainError(f"grid size must be >= 2, got {n!r}")
    mids = (np.arange(n) + 0.5) / n
    joint = np.full((n, n), 1.0 / (n * n))
    cf = CompositeForm(Expectation(), AVaR(alpha))
    cost_x = np.tile(mids[:, None], (1, n))
    cost_y = np.tile(mids[None, :], (n, 1))
    v1 = composite_evaluate(cf, ProductModel(cost_x, joint))
    v2 = composite_evaluate(cf, ProductModel(cost_y, joint))
    return v1, v2


# ---------------------------------------------------------------------------
# multi-space models
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MultiModel:
    """Cost and joint probability tensors over n >= 2 finite spaces."""

    cost: np.ndarray
    joint: np.ndarray

    def __post_init__(self):
        cost = np.array(np.asarray(self.cost, dtype=float), copy=True)
        joint = np.array(np.asarray(self.joint, dtype=float), copy=True)
        if cost.ndim < 2:
            raise ValidationError("a multi-space model needs at least two spaces")
        if cost.shape != joint.shape:
            raise ValidationError(
                f"cost shape {cost.shape} and joint shape {joint.shape} disagree"
            )
        if not np.all(np.isfinite(cost)):
            raise ValidationError("cost entries must be finite")
        _check_mass(joint, "joint tensor")
        cost.setflags(write=False)
        joint.setflags(write=False)
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "joint", joint)

    @property
    def n_spaces(self) -> int:
        return self.cost.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cost.shape


def _validated_axes(J: Sequence[int], n: int) -> tuple[int, ...]:
    axes = tuple(sorted(set(int(j) for j in J)))
    if any(j < 0 or j >= n for j in axes):
        raise DomainError(f"axis indices must lie in [0, {n}), got {J!r}")
    return axes


def multi_disintegrate(mm: MultiModel, J: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Marginal over the axes in ``J`` and the kernel to the remaining axes.

    The kernel tensor is laid out with the (sorted) ``J`` axes first and the
    complement axes after; slices at zero-marginal points are uniform.
    """
    n = mm.n_spaces
    axes = _validated_axes(J, n)
    if not axes or len(axes) == n:
        raise DomainError(f"J must be a nonempty proper subset of the {n} axes, got {J!r}")
    comp = tuple(j for j in range(n) if j not in axes)
    marginal = mm.joint.sum(axis=comp)
    moved = np.transpose(mm.joint, axes + comp)
    comp_shape = tuple(mm.shape[j] for j in comp)
    comp_size = int(np.prod(comp_shape))
    flat = moved.reshape(-1, comp_size)
    mass = marginal.reshape(-1)
    kernel = np.empty_like(flat)
    for i in range(flat.shape[0]):
        if mass[i] > 0.0:
            kernel[i] = flat[i] / mass[i]
        else:
            kernel[i] = 1.0 / comp_size
    return marginal, kernel.reshape(moved.shape)


def nested_evaluate(forms: Sequence[RiskFormSpec], cost: np.ndarray, joint: np.ndarray) -> float:
    """Evaluate a nested composite, one form per coordinate, by recursive
    two-space disintegration along the leading axis."""
    cost = np.asarray(cost, dtype=float)
    joint = np.asarray(joint, dtype=float)
    if cost.shape != joint.shape:
        raise ValidationError(f"cost shape {cost.shape} and joint shape {joint.shape} disagree")
    if len(forms) != cost.ndim:
        raise ValidationError(
            f"need one form per coordinate: got {len(forms)} forms for {cost.ndim} axes"
        )
    if cost.ndim == 1:
        return evaluate(forms[0], FiniteModel(cost, joint))
    marginal = joint.sum(axis=tuple(range(1, joint.ndim)))
    k = cost.shape[0]
    inner_size = int(np.prod(cost.shape[1:]))
    values = np.empty(k)
    for i in range(k):
        if marginal[i] > 0.0:
            sub = joint[i] / marginal[i]
        else:
            sub = np.full(cost.shape[1:], 1.0 / inner_size)
        values[i] = nested_evaluate(forms[1:], cost[i], sub)
    return evaluate(forms[0], FiniteModel(values, marginal))


@dataclass(frozen=True)
class TowerReport:
    """Both-sides comparison of the nested-conditional and nested-marginal
    identities at a given pair of prefix index sets."""

    j_axes: tuple[int, ...]
    l_axes: tuple[int, ...]
    conditional_discrepancy: float
    marginal_discrepancy: float
    checks: int

    @property
    def max_discrepancy(self) -> float:
        return max(self.conditional_discrepancy, self.marginal_discrepancy)


def _broadcast_from_axes(f: np.ndarray, axes: tuple[int, ...], shape: tuple[int, ...]) -> np.ndarray:
    """Lift a tensor living on ``axes`` to the full ``shape`` by constant
    extension along the remaining axes."""
    expand = [slice(None) if j in axes else None for j in range(len(shape))]
    return np.broadcast_to(f[tuple(expand)], shape)


def tower_check(
    mm: MultiModel,
    forms: Sequence[RiskFormSpec],
    J: Sequence[int],
    L: Sequence[int],
) -> TowerReport:
    """Compare both evaluation routes for nested conditioning.

    ``J`` and ``L`` must be nested prefixes of the coordinate order (the
    composite conditions coordinate by coordinate, so only prefix blocks
    carry marginal/conditional forms).  Two identities are exercised:

    * conditional nesting: conditioning on a prefix of ``L`` and then on the
      rest of ``L`` equals conditioning on ``L`` at once;
    * marginal nesting: the marginal form on ``J`` of the marginal form on
      ``L`` equals the marginal form on ``J`` of the full composite.

    Functions used depend only on the relevant coordinates; the report holds
    the maximum absolute discrepancy per identity.
    """
    n = mm.n_spaces
    if len(forms) != n:
        raise ValidationError(f"need {n} forms, got {len(forms)}")
    j_axes = _validated_axes(J, n)
    l_axes = _validated_axes(L, n)
    j, l = len(j_axes), len(l_axes)
    if not (0 < j < l <= n):
        raise DomainError(f"need nonempty J strictly inside L, got J={J!r}, L={L!r}")
    if j_axes != tuple(range(j)) or l_axes != tuple(range(l)):
        raise DomainError(
            f"J and L must be prefixes of the coordinate order, got J={J!r}, L={L!r}"
        )
    shape = mm.shape
    checks = 0

    # marginal nesting on functions of the J coordinates
    comp_j = tuple(range(j, n))
    comp_l = tuple(range(l, n))
    marg_disc = 0.0
    candidates = [mm.cost.mean(axis=comp_j), mm.cost[(slice(None),) * j + (0,) * (n - j)]]
    joint_l = mm.joint.sum(axis=comp_l) if l < n else mm.joint
    for f in candidates:
        full = nested_evaluate(forms, _broadcast_from_axes(f, j_axes, shape), mm.joint)
        viaL = nested_evaluate(
            forms[:l], _broadcast_from_axes(f, j_axes, shape[:l]), joint_l
        )
        marg_disc = max(marg_disc, abs(full - viaL))
        checks += 1

    # conditional nesting at every base point of the L coordinates
    cond_disc = 0.0
    if l < n:
        comp_shape = shape[l:]
        comp_size = int(np.prod(comp_shape))
        for x_l in itertools.product(*(range(s) for s in shape[:l])):
            slice_mass = mm.joint[x_l].sum()
            if slice_mass > 0.0:
                q = mm.joint[x_l] / slice_mass
            else:
                q = np.full(comp_shape, 1.0 / comp_size)
            f = mm.cost[x_l]

            joint_full = np.zeros(shape)
            joint_full[x_l] = q
            cost_full = _broadcast_from_axes(f, tuple(range(l, n)), shape)
            full = nested_evaluate(forms, cost_full, joint_full)

            x_k = x_l[j:]
            sub_shape = shape[j:]
            joint_sub = np.zeros(sub_shape)
            joint_sub[x_k] = q
            cost_sub = _broadcast_from_axes(f, tuple(range(l - j, n - j)), sub_shape)
            nested = nested_evaluate(forms[j:], cost_sub, joint_sub)

            cond_disc = max(cond_disc, abs(full - nested))
            checks += 1

    return TowerReport(j_axes, l_axes, cond_disc, marg_disc, checks)
