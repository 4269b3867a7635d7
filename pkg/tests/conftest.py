"""Shared random-instance generators and independent oracles.

Oracles here deliberately avoid the library's own code paths: brute-force
scans, dense grids, and direct summation only.
"""

from __future__ import annotations

import numpy as np

from riskforms.model import FiniteModel


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def random_probs(rng: np.random.Generator, n: int, zeros: int = 0) -> np.ndarray:
    """Random probability vector; ``zeros`` entries are exactly zero."""
    w = rng.uniform(0.05, 1.0, size=n)
    if zeros:
        idx = rng.choice(n, size=min(zeros, n - 1), replace=False)
        w[idx] = 0.0
    return w / w.sum()


def random_model(
    rng: np.random.Generator,
    min_size: int = 1,
    max_size: int = 6,
    lo: float = -10.0,
    hi: float = 10.0,
    zeros: int = 0,
) -> FiniteModel:
    n = int(rng.integers(min_size, max_size + 1))
    values = rng.uniform(lo, hi, size=n)
    return FiniteModel(values, random_probs(rng, n, zeros=zeros))


def random_joint(rng: np.random.Generator, nx: int, ny: int, zero_rows: int = 0) -> np.ndarray:
    w = rng.uniform(0.05, 1.0, size=(nx, ny))
    if zero_rows:
        idx = rng.choice(nx, size=min(zero_rows, nx - 1), replace=False)
        w[idx, :] = 0.0
    return w / w.sum()


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

def integrated_tail_oracle(values, probs, eta: float) -> float:
    """E[(Z - eta)_+] by direct summation."""
    return float(sum(p * max(v - eta, 0.0) for v, p in zip(values, probs)))


def cdf_oracle(values, probs, z: float) -> float:
    return float(sum(p for v, p in zip(values, probs) if v <= z))


def quantile_scan_oracle(values, probs, p: float) -> float:
    """inf{eta : F(eta) >= p} scanned over a sorted grid containing all atoms."""
    for eta in sorted(set(values)):
        if cdf_oracle(values, probs, eta) >= p - 1e-12:
            return eta
    raise AssertionError("no atom reaches the requested level")


def icx_grid_oracle(m1: FiniteModel, m2: FiniteModel, n_grid: int = 2001) -> bool:
    """Increasing convex order checked on a dense threshold grid spanning
    both supports with margin."""
    lo = min(m1.values.min(), m2.values.min()) - 2.0
    hi = max(m1.values.max(), m2.values.max()) + 2.0
    for eta in np.linspace(lo, hi, n_grid):
        t1 = integrated_tail_oracle(m1.values, m1.probs, eta)
        t2 = integrated_tail_oracle(m2.values, m2.probs, eta)
        if t1 > t2 + 1e-9:
            return False
    return True


def avar_tail_oracle(values, probs, alpha: float) -> float:
    """Mean of the worst alpha-fraction of outcomes, by explicit tail
    accumulation over outcomes sorted in decreasing order."""
    if alpha == 0.0:
        return max(v for v, p in zip(values, probs) if p > 0.0)
    order = sorted(range(len(values)), key=lambda i: -values[i])
    remaining = alpha
    acc = 0.0
    for i in order:
        take = min(probs[i], remaining)
        acc += take * values[i]
        remaining -= take
        if remaining <= 1e-15:
            break
    return acc / alpha
