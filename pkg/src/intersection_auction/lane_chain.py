"""Lane-based absorbing chain: per-lane arrival odds, moving-lane averaging.

States label each non-focal lane Empty/Lower/Higher.  From a non-terminal
state, each Higher lane is the moving (serviced) lane with equal weight; the
moving lane and every empty lane are open and redraw their label (empty with
1-p_j, lower with p_j*F, higher with p_j*(1-F)), while all other lanes are
closed and keep theirs.  The cost-to-go system has no per-count cascade, so
all non-terminal states are solved in one dense system; the 3^(Q-1) state
count makes that expensive past seven lanes or so.
"""

from __future__ import annotations

import itertools
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .model import (
    DomainError,
    IntersectionParams,
    LaneState,
    Occupancy,
    lane_state_terminal,
)
from .numerics import solve_dense

_STRUCTURE_CACHE: Dict[Tuple[int, Tuple[float, ...]], tuple] = {}
_ZERO_F_CACHE: Dict[Tuple[int, Tuple[float, ...], float], np.ndarray] = {}


def lane_states(lanes: int) -> List[LaneState]:
    """All 3^(Q-1) label sequences, in base-3 order (Empty<Lower<Higher)."""
    if lanes < 2:
        raise DomainError("lanes must be at least 2")
    return [
        tuple(z)
        for z in itertools.product(
            (Occupancy.EMPTY, Occupancy.LOWER, Occupancy.HIGHER), repeat=lanes - 1
        )
    ]


def encode(z: LaneState) -> int:
    """Base-3 index of a lane state; inverse of the lane_states ordering."""
    code = 0
    for entry in z:
        code = code * 3 + int(entry)
    return code


def lane_transition_prob(
    z: LaneState, z_next: LaneState, lane_probs: Sequence[float], Fv: float
) -> float:
    """One-step transition probability, averaged over candidate moving lanes."""
    if len(z) != len(z_next) or len(z) != len(lane_probs):
        raise DomainError("state and lane_probs lengths must agree")
    if not 0.0 <= Fv <= 1.0 or any(not 0.0 <= p <= 1.0 for p in lane_probs):
        raise DomainError("probabilities must lie in [0, 1]")
    movers = [j for j, s in enumerate(z) if s == Occupancy.HIGHER]
    if not movers:
        raise DomainError(f"{z} is terminal; it has no outgoing transitions")
    total = 0.0
    for k in movers:
        prob = 1.0
        for j, (s, s_next) in enumerate(zip(z, z_next)):
            pj = lane_probs[j]
            if s == Occupancy.EMPTY or j == k:
                if s_next == Occupancy.EMPTY:
                    prob *= 1.0 - pj
                elif s_next == Occupancy.LOWER:
                    prob *= pj * Fv
                else:
                    prob *= pj * (1.0 - Fv)
            elif s_next != s:
                prob = 0.0
                break
        total += prob
    return total / len(movers)


def _structure(lanes: int, probs: Tuple[float, ...]) -> tuple:
    """Monomial decomposition of the transition operator.

    Every entry P(z -> z') is a sum of terms c * F^a * (1-F)^b; collecting
    the (row, column, exponent-pair) coefficients once lets a whole batch of
    F values assemble its transition matrices with one matrix product.
    """
    key = (lanes, probs)
    if key in _STRUCTURE_CACHE:
        return _STRUCTURE_CACHE[key]
    states = lane_states(lanes)
    n = len(states)
    exp_index: Dict[Tuple[int, int], int] = {}
    poly: Dict[int, Dict[int, float]] = {}
    for i, z in enumerate(states):
        movers = [j for j, s in enumerate(z) if s == Occupancy.HIGHER]
        if not movers:
            continue
        weight = 1.0 / len(movers)
        for k in movers:
            open_lanes = [j for j, s in enumerate(z) if s == Occupancy.EMPTY or j == k]
            for labels in itertools.product(
                (Occupancy.EMPTY, Occupancy.LOWER, Occupancy.HIGHER),
                repeat=len(open_lanes),
            ):
                z_next = list(z)
                coeff = weight
                a = b = 0
                for j, lab in zip(open_lanes, labels):
                    z_next[j] = lab
                    pj = probs[j]
                    if lab == Occupancy.EMPTY:
                        coeff *= 1.0 - pj
                    elif lab == Occupancy.LOWER:
                        coeff *= pj
                        a += 1
                    else:
                        coeff *= pj
                        b += 1
                if coeff == 0.0:
                    continue
                ab = exp_index.setdefault((a, b), len(exp_index))
                flat = i * n + encode(tuple(z_next))
                poly.setdefault(flat, {})
                poly[flat][ab] = poly[flat].get(ab, 0.0) + coeff
    positions = np.array(sorted(poly), dtype=np.int64)
    K = np.zeros((positions.size, len(exp_index)))
    for row, flat in enumerate(positions):
        for ab, c in poly[flat].items():
            K[row, ab] = c
    exponents = np.zeros((len(exp_index), 2), dtype=np.int64)
    for (a, b), pos in exp_index.items():
        exponents[pos] = (a, b)
    terminal = np.array([lane_state_terminal(z) for z in states])
    structure = (n, positions, K, exponents, terminal)
    _STRUCTURE_CACHE[key] = structure
    return structure


def lane_transition_matrices(
    lanes: int, lane_probs: Sequence[float], F_values: Sequence[float]
) -> Tuple[np.ndarray, np.ndarray]:
    """Batched dense transition matrices and the terminal mask.

    Terminal rows are identity self-loops.  Memory grows with
    len(F_values) * 9^(Q-1); callers in the large-Q regime should chunk.
    """
    probs = tuple(float(p) for p in lane_probs)
    F = np.atleast_1d(np.asarray(F_values, dtype=float))
    if ((F < 0.0) | (F > 1.0)).any():
        raise DomainError("F values must lie in [0, 1]")
    n, positions, K, exponents, terminal = _structure(lanes, probs)
    monomials = (
        F[:, None] ** exponents[None, :, 0]
        * (1.0 - F)[:, None] ** exponents[None, :, 1]
    )
    P = np.zeros((F.shape[0], n * n))
    P[:, positions] = monomials @ K.T
    P = P.reshape(F.shape[0], n, n)
    t_idx = np.flatnonzero(terminal)
    P[:, t_idx, t_idx] = 1.0
    return P, terminal


def lane_wait_tables(
    lanes: int,
    lane_probs: Sequence[float],
    F_values: Sequence[float],
    step_cost: float = 1.0,
) -> np.ndarray:
    """Expected waits of every lane state for a batch of bid quantiles.

    Shape (len(F_values), 3^(Q-1)), ordered like :func:`lane_states`.  The
    full non-terminal system is solved in one step per batch.
    """
    F = np.atleast_1d(np.asarray(F_values, dtype=float))
    P, terminal = lane_transition_matrices(lanes, lane_probs, F)
    nt = np.flatnonzero(~terminal)
    A = -P[:, nt[:, None], nt[None, :]]
    A[:, np.arange(nt.size), np.arange(nt.size)] += 1.0
    b = np.full((F.shape[0], nt.size), float(step_cost))
    sol = solve_dense(A, b)
    W = np.zeros((F.shape[0], terminal.size))
    W[:, nt] = sol
    return W


def lane_wait_zero_bid(
    lanes: int, lane_probs: Sequence[float], step_cost: float = 1.0
) -> np.ndarray:
    probs = tuple(float(p) for p in lane_probs)
    key = (lanes, probs, float(step_cost))
    if key not in _ZERO_F_CACHE:
        table = lane_wait_tables(lanes, probs, [0.0], step_cost)[0]
        table.flags.writeable = False
        _ZERO_F_CACHE[key] = table
    return _ZERO_F_CACHE[key]


def resolve_lane_probs(
    params: IntersectionParams, lane_probs: Optional[Sequence[float]]
) -> Tuple[float, ...]:
    """Pick the Q-1 non-focal probabilities the chain runs on."""
    if lane_probs is not None:
        probs = tuple(float(p) for p in lane_probs)
    else:
        probs = params.arrival_probs
    if len(probs) != params.lanes - 1:
        raise DomainError(
            f"need {params.lanes - 1} non-focal lane probabilities, got "
            f"{len(probs)}; pass lane_probs aligned to the canonical order"
        )
    return probs


def lane_wait(
    v: float,
    z: LaneState,
    params: IntersectionParams,
    lane_probs: Optional[Sequence[float]] = None,
) -> float:
    """Expected waiting time (seconds) of lane state z for a user bidding v."""
    if len(z) != params.lanes - 1:
        raise DomainError(f"state length {len(z)} does not match Q={params.lanes}")
    probs = resolve_lane_probs(params, lane_probs)
    Fv = params.dist.cdf(v)
    table = lane_wait_tables(params.lanes, probs, [Fv], params.step_cost)
    return float(table[0, encode(z)])
