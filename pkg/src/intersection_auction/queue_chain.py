"""Queue-based absorbing chain: expected waits under uniform arrival odds.

The state (lower, empty) counts the non-focal lanes holding lower bidders
and the empty lanes; the remaining lanes hold higher bidders, one of whom is
serviced each period.  After a service, the freed lane plus every empty lane
is in play: each independently stays empty with probability 1-p, gains a
lower bidder with p*F(v), or gains a higher bidder with p*(1-F(v)).  The
lower count never decreases, so the cost-to-go system decomposes by lower
count and is solved as a cascade of small dense systems, highest count
first.
"""

from __future__ import annotations

import math
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .model import BidDistribution, DomainError, IntersectionParams, QueueState
from .numerics import solve_dense

_STRUCTURE_CACHE: Dict[Tuple[int, float], list] = {}
_INDEX_CACHE: Dict[int, Dict[QueueState, int]] = {}
_ZERO_F_CACHE: Dict[Tuple[int, float, float], np.ndarray] = {}


def queue_states(lanes: int) -> List[QueueState]:
    """All (lower, empty) states, lower-major order; Q(Q+1)/2 of them."""
    if lanes < 2:
        raise DomainError("lanes must be at least 2")
    return [
        QueueState(lo, em)
        for lo in range(lanes)
        for em in range(lanes - lo)
    ]


def state_index(lanes: int) -> Dict[QueueState, int]:
    if lanes not in _INDEX_CACHE:
        _INDEX_CACHE[lanes] = {q: i for i, q in enumerate(queue_states(lanes))}
    return _INDEX_CACHE[lanes]


def queue_transition_prob(
    q: QueueState, q_next: QueueState, p: float, Fv: float, lanes: int
) -> float:
    """One-step transition probability between count states."""
    if not (0.0 <= p <= 1.0 and 0.0 <= Fv <= 1.0):
        raise DomainError("p and Fv must lie in [0, 1]")
    q.validate(lanes)
    q_next.validate(lanes)
    if q.is_terminal(lanes):
        raise DomainError(f"{q} is terminal; it has no outgoing transitions")
    d_lower = q_next.lower - q.lower
    if d_lower < 0:
        return 0.0
    in_play = q.empty + 1
    new_higher = in_play - q_next.empty - d_lower
    if q_next.empty > in_play or d_lower > in_play - q_next.empty or new_higher < 0:
        return 0.0
    return (
        math.comb(in_play, q_next.empty)
        * (1.0 - p) ** q_next.empty
        * math.comb(in_play - q_next.empty, d_lower)
        * (p * Fv) ** d_lower
        * (p * (1.0 - Fv)) ** new_higher
    )


class _Stage:
    """Numeric elimination structure of one lower-count stage, for a fixed
    arrival probability; everything here is reused across bid quantiles."""

    __slots__ = (
        "size",
        "same_rows",
        "same_cols",
        "same_coef",
        "same_ehi",
        "cross_cols",
        "cross_coef",
        "cross_elo",
        "cross_ehi",
        "cross_starts",
        "cross_rows",
        "out_cols",
    )


def _structure(lanes: int, p: float) -> List[_Stage]:
    """Per-stage arrays: same-stage matrix entries carry a (1-F)^e factor,
    cross-stage terms feed the right-hand side from already-solved waits."""
    key = (lanes, float(p))
    if key in _STRUCTURE_CACHE:
        return _STRUCTURE_CACHE[key]
    idx = state_index(lanes)
    stages = []
    for k in range(lanes - 2, -1, -1):
        m = lanes - 1 - k
        same = []
        cross = []
        for l in range(m):
            in_play = l + 1
            for emp in range(in_play + 1):
                c_emp = math.comb(in_play, emp) * (1.0 - p) ** emp
                for d_lo in range(in_play - emp + 1):
                    hi = in_play - emp - d_lo
                    target = QueueState(k + d_lo, emp)
                    if target.lower + target.empty > lanes - 1:
                        continue
                    if target.is_terminal(lanes):
                        continue
                    c = c_emp * math.comb(in_play - emp, d_lo) * p ** (d_lo + hi)
                    if d_lo == 0:
                        same.append((l, emp, c, hi))
                    else:
                        cross.append((l, idx[target], c, d_lo, hi))
        st = _Stage()
        st.size = m
        st.same_rows = np.array([t[0] for t in same], dtype=np.int64)
        st.same_cols = np.array([t[1] for t in same], dtype=np.int64)
        st.same_coef = np.array([t[2] for t in same])
        st.same_ehi = np.array([t[3] for t in same], dtype=np.int64)
        cross.sort()
        st.cross_cols = np.array([t[1] for t in cross], dtype=np.int64)
        st.cross_coef = np.array([t[2] for t in cross])
        st.cross_elo = np.array([t[3] for t in cross], dtype=np.int64)
        st.cross_ehi = np.array([t[4] for t in cross], dtype=np.int64)
        rows = np.array([t[0] for t in cross], dtype=np.int64)
        st.cross_rows, st.cross_starts = (
            np.unique(rows, return_index=True) if cross else (rows, rows)
        )
        st.out_cols = np.array([idx[QueueState(k, l)] for l in range(m)])
        stages.append(st)
    _STRUCTURE_CACHE[key] = stages
    return stages


def queue_wait_tables(
    lanes: int, p: float, F_values: Sequence[float], step_cost: float = 1.0
) -> np.ndarray:
    """Expected waits of every state for a batch of bid quantiles.

    Returns an array of shape (len(F_values), number of states) ordered like
    :func:`queue_states`.  Each quantile's cascade shares the vectorized
    elimination, which is what makes per-segment quadrature affordable.
    """
    F = np.atleast_1d(np.asarray(F_values, dtype=float))
    if F.ndim != 1:
        raise DomainError("F_values must be one-dimensional")
    if ((F < 0.0) | (F > 1.0)).any() or not 0.0 <= p <= 1.0:
        raise DomainError("p and F values must lie in [0, 1]")
    n = F.shape[0]
    one_m_F = (1.0 - F)[:, None]
    W = np.zeros((n, len(queue_states(lanes))))
    for st in _structure(lanes, p):
        m = st.size
        A = np.zeros((n, m, m))
        A[:, np.arange(m), np.arange(m)] = 1.0
        A[:, st.same_rows, st.same_cols] -= st.same_coef * one_m_F**st.same_ehi
        b = np.full((n, m), float(step_cost))
        if st.cross_cols.size:
            vals = (
                st.cross_coef
                * F[:, None] ** st.cross_elo
                * one_m_F**st.cross_ehi
                * W[:, st.cross_cols]
            )
            b[:, st.cross_rows] += np.add.reduceat(vals, st.cross_starts, axis=1)
        W[:, st.out_cols] = solve_dense(A, b)
    return W


def queue_wait_zero_bid(lanes: int, p: float, step_cost: float = 1.0) -> np.ndarray:
    """Wait table at F = 0 (minimal bid); memoized, it never varies per user."""
    key = (lanes, float(p), float(step_cost))
    if key not in _ZERO_F_CACHE:
        table = queue_wait_tables(lanes, p, [0.0], step_cost)[0]
        table.flags.writeable = False
        _ZERO_F_CACHE[key] = table
    return _ZERO_F_CACHE[key]


def queue_wait(
    v: float, q: QueueState, params: IntersectionParams, p: float
) -> float:
    """Expected waiting time (seconds) of state q for a user bidding v."""
    q.validate(params.lanes)
    Fv = params.dist.cdf(v)
    table = queue_wait_tables(params.lanes, p, [Fv], params.step_cost)
    return float(table[0, state_index(params.lanes)[q]])


def queue_transition_matrix(
    lanes: int, p: float, Fv: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Dense transition matrix over all states plus the terminal-state mask.

    Terminal rows get a self-loop; used by the Monte-Carlo oracle and the
    stochasticity tests rather than the exact solver.
    """
    states = queue_states(lanes)
    n = len(states)
    P = np.zeros((n, n))
    terminal = np.array([q.is_terminal(lanes) for q in states])
    for i, q in enumerate(states):
        if terminal[i]:
            P[i, i] = 1.0
            continue
        for j, q_next in enumerate(states):
            P[i, j] = queue_transition_prob(q, q_next, p, Fv, lanes)
    return P, terminal
