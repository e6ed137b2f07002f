"""Shared numeric kernels: dense solves, segment quadrature, MC absorption.

The chain solvers need many small dense systems (one per quadrature node per
bid segment), so :func:`solve_dense` accepts stacked batches ``(..., n, n)``
and eliminates all of them in lockstep with partial pivoting.
"""

from __future__ import annotations

import warnings
from typing import Callable, Tuple

import numpy as np

PIVOT_TOL = 1e-14
SIMPSON_SUBINTERVALS = 32
SIMPSON_REFINE_TOL = 1e-8
MC_STEP_BOUND = 10**6


class SingularSystemError(ArithmeticError):
    """Pivot below tolerance; the linear system is (numerically) singular."""


class DivergenceError(ArithmeticError):
    """A Monte-Carlo replication exceeded the absorption step bound."""


class QuadratureWarning(RuntimeWarning):
    """Simpson result disagrees with its refinement beyond tolerance."""


def solve_dense(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A x = b by Gaussian elimination with partial pivoting.

    `A` may be a batch ``(..., n, n)`` with `b` of shape ``(..., n)``; every
    system in the batch is pivoted independently.  Raises
    :class:`SingularSystemError` when any pivot magnitude falls below 1e-14.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError(f"A must be square, got shape {A.shape}")
    if b.shape != A.shape[:-1]:
        raise ValueError(f"b shape {b.shape} does not match A shape {A.shape}")
    if not (np.isfinite(A).all() and np.isfinite(b).all()):
        raise ValueError("non-finite entries in the system")
    n = A.shape[-1]
    if n == 0:
        return b
    batch = A.shape[:-2]
    A = A.reshape(-1, n, n)
    b = b.reshape(-1, n)
    m = A.shape[0]
    rows = np.arange(m)

    for k in range(n):
        piv = k + np.argmax(np.abs(A[:, k:, k]), axis=1)
        if np.min(np.abs(A[rows, piv, k])) < PIVOT_TOL:
            raise SingularSystemError(f"pivot below {PIVOT_TOL} at column {k}")
        swap = piv != k
        if swap.any():
            sw = rows[swap]
            A[sw, k, :], A[sw, piv[swap], :] = (
                A[sw, piv[swap], :].copy(),
                A[sw, k, :].copy(),
            )
            b[sw, k], b[sw, piv[swap]] = b[sw, piv[swap]].copy(), b[sw, k].copy()
        if k + 1 < n:
            factors = A[:, k + 1 :, k] / A[:, k : k + 1, k]
            A[:, k + 1 :, k:] -= factors[:, :, None] * A[:, None, k, k:]
            b[:, k + 1 :] -= factors * b[:, k : k + 1]

    x = np.empty_like(b)
    for k in range(n - 1, -1, -1):
        acc = b[:, k] - np.einsum("ij,ij->i", A[:, k, k + 1 :], x[:, k + 1 :])
        x[:, k] = acc / A[:, k, k]
    return x.reshape(*batch, n)


def integrate_segment(f: Callable[[np.ndarray], np.ndarray], a: float, b: float) -> float:
    """Composite Simpson with 32 subintervals on [a, b].

    `f` must accept a vector of sample points.  The same samples also yield
    the 64-subinterval refinement; a disagreement beyond 1e-8 emits a
    :class:`QuadratureWarning`.  Non-finite samples raise.
    """
    if a > b:
        raise ValueError(f"empty segment [{a}, {b}]")
    if a == b:
        return 0.0
    xs = np.linspace(a, b, 2 * SIMPSON_SUBINTERVALS + 1)
    ys = np.asarray(f(xs), dtype=float)
    if ys.shape != xs.shape:
        raise ValueError("integrand must return one value per sample point")
    if not np.isfinite(ys).all():
        raise ArithmeticError("non-finite integrand sample")
    coarse = _simpson(ys[::2], (b - a) / SIMPSON_SUBINTERVALS)
    fine = _simpson(ys, (b - a) / (2 * SIMPSON_SUBINTERVALS))
    if abs(coarse - fine) > SIMPSON_REFINE_TOL * max(1.0, abs(fine)):
        warnings.warn(
            f"Simpson refinement moved by {abs(coarse - fine):.3e} on [{a}, {b}]",
            QuadratureWarning,
            stacklevel=2,
        )
    return float(coarse)


def _simpson(ys: np.ndarray, h: float) -> float:
    return h / 3.0 * (ys[0] + ys[-1] + 4.0 * ys[1:-1:2].sum() + 2.0 * ys[2:-1:2].sum())


def mc_absorb_oracle(
    start: int,
    sampler: Callable[[np.ndarray, np.ndarray], np.ndarray],
    is_terminal: Callable[[np.ndarray], np.ndarray],
    cost: float,
    reps: int,
    seed: int,
) -> Tuple[float, float]:
    """Mean accumulated one-step cost to absorption, with standard error.

    `sampler(states, u)` maps integer state codes and iid uniforms to next
    codes; `is_terminal(states)` marks absorbing codes.  All replications
    walk in lockstep from one generator seeded with `seed`, so the estimate
    is reproducible.  Raises :class:`DivergenceError` past 1e6 steps.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    rng = np.random.default_rng(seed)
    states = np.full(reps, start, dtype=np.int64)
    steps = np.zeros(reps, dtype=np.int64)
    active = ~np.asarray(is_terminal(states))
    count = 0
    while active.any():
        count += 1
        if count > MC_STEP_BOUND:
            raise DivergenceError(f"no absorption within {MC_STEP_BOUND} steps")
        idx = np.flatnonzero(active)
        u = rng.random(idx.size)
        states[idx] = sampler(states[idx], u)
        steps[idx] += 1
        active[idx] = ~np.asarray(is_terminal(states[idx]))
    totals = steps * cost
    mean = float(totals.mean())
    se = float(totals.std(ddof=1) / np.sqrt(reps)) if reps > 1 else 0.0
    return mean, se


def matrix_sampler(P: np.ndarray) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Transition sampler over state codes from a row-stochastic matrix."""
    cum = np.cumsum(np.asarray(P, dtype=float), axis=1)
    cum[:, -1] = 1.0

    def sample(states: np.ndarray, u: np.ndarray) -> np.ndarray:
        rows = cum[states]
        return (u[:, None] > rows).sum(axis=1)

    return sample
