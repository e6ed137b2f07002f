"""Discrete-time simulation of the priority-serviced intersection.

Each period: (1) the occupant with the highest declared bid departs,
lowest lane index breaking ties; (2) every lane empty after the departure
receives a new user with its arrival probability; (3) each new arrival is
priced immediately against the post-arrival snapshot.  Lanes hold one user
each, which keeps the simulator on the same state space as the pricing
chains.

Draw protocol (step T, fixed so an independent reimplementation can walk the
same generator): for each empty lane in ascending index order, one uniform
for the arrival trial, then one uniform for the true value if it arrives,
then one uniform for the declared bid when the misreport policy is active.
Pricing consumes no randomness.  An arrival in period T is stamped
arrival_step = T + 1, the first period it can be serviced; a user serviced
the moment it reaches the front therefore records zero wait, matching the
chains' terminal states.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .model import DomainError, IntersectionParams, PriceQuote, PricingSnapshot
from .pricing import LaneModel, QueueModel, WaitModel, quote, static_quote


class MechanismKind(enum.Enum):
    QUEUE = "queue"
    LANE = "lane"
    STATIC = "static"


@dataclass(frozen=True)
class SweepSpec:
    true_bins: int
    declared_bins: int

    def __post_init__(self) -> None:
        if self.true_bins < 1 or self.declared_bins < 1:
            raise DomainError("sweep bin counts must be positive")


@dataclass(frozen=True)
class SimConfig:
    params: IntersectionParams
    mechanism: MechanismKind
    users: int
    seed: int
    bins: int = 30
    sweep: Optional[SweepSpec] = None

    def __post_init__(self) -> None:
        if self.users < 1:
            raise DomainError("users must be positive")
        if self.bins < 1:
            raise DomainError("bins must be positive")
        if len(self.params.arrival_probs) != self.params.lanes:
            raise DomainError("need one arrival probability per lane")


@dataclass(slots=True)
class UserRecord:
    true_value: float
    declared: float
    arrival_step: int
    service_step: int
    experienced_wait: float
    expected_wait: float
    payment: float
    generalized_cost: float
    lane: int


@dataclass(slots=True)
class _Occupant:
    lane: int
    true_value: float
    declared: float
    arrival_step: int
    expected_wait: float
    payment: float


@dataclass
class World:
    """Mutable simulation state; `step` advances it one period."""

    config: SimConfig
    misreport: bool = False
    time: int = 0
    occupants: List[Optional[_Occupant]] = field(default_factory=list)
    records: List[UserRecord] = field(default_factory=list)
    arrivals: int = 0
    _models: Dict[int, WaitModel] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.occupants:
            self.occupants = [None] * self.config.params.lanes

    def model_for(self, focal_lane: int) -> Optional[WaitModel]:
        if focal_lane not in self._models:
            params = self.config.params
            if self.config.mechanism == MechanismKind.QUEUE:
                self._models[focal_lane] = QueueModel(params.mean_arrival_prob)
            elif self.config.mechanism == MechanismKind.LANE:
                probs = tuple(
                    params.arrival_probs[j]
                    for j in range(params.lanes)
                    if j != focal_lane
                )
                self._models[focal_lane] = LaneModel(probs)
        return self._models.get(focal_lane)

    def queued(self) -> int:
        return sum(1 for occ in self.occupants if occ is not None)


def new_world(config: SimConfig, misreport: bool = False) -> World:
    return World(config=config, misreport=misreport)


def step(world: World, rng: np.random.Generator) -> World:
    """Advance one period: departure, arrivals, pricing of the arrivals."""
    params = world.config.params
    occupied = [occ for occ in world.occupants if occ is not None]
    if occupied:
        leader = max(occupied, key=lambda o: (o.declared, -o.lane))
        world.occupants[leader.lane] = None
        wait = (world.time - leader.arrival_step) * params.step_cost
        world.records.append(
            UserRecord(
                true_value=leader.true_value,
                declared=leader.declared,
                arrival_step=leader.arrival_step,
                service_step=world.time,
                experienced_wait=wait,
                expected_wait=leader.expected_wait,
                payment=leader.payment,
                generalized_cost=leader.true_value * wait + leader.payment,
                lane=leader.lane,
            )
        )
    dist = params.dist
    span = dist.v_ub - dist.v_lb
    fresh: List[_Occupant] = []
    for lane in range(params.lanes):
        if world.occupants[lane] is not None:
            continue
        if rng.random() >= params.arrival_probs[lane]:
            continue
        true_value = dist.v_lb + span * rng.random()
        declared = dist.v_lb + span * rng.random() if world.misreport else true_value
        occ = _Occupant(
            lane=lane,
            true_value=true_value,
            declared=declared,
            arrival_step=world.time + 1,
            expected_wait=0.0,
            payment=0.0,
        )
        world.occupants[lane] = occ
        world.arrivals += 1
        fresh.append(occ)
    for occ in fresh:
        snap = PricingSnapshot(
            focal_lane=occ.lane,
            focal_bid=occ.declared,
            occupants={
                o.lane: o.declared
                for o in world.occupants
                if o is not None and o.lane != occ.lane
            },
        )
        q = _price(world, snap, occ.declared, occ.true_value)
        occ.expected_wait = q.wait
        occ.payment = q.payment
    world.time += 1
    return world


def _price(world: World, snap: PricingSnapshot, declared: float, true: float) -> PriceQuote:
    if world.config.mechanism == MechanismKind.STATIC:
        return static_quote(snap, declared, true, world.config.params)
    model = world.model_for(snap.focal_lane)
    assert model is not None
    return quote(model, snap, declared, true, world.config.params)


def run(config: SimConfig) -> Tuple[List[UserRecord], "BinnedStats"]:
    """Simulate until `config.users` have been serviced; truthful bidding."""
    records = _run(config, misreport=False)
    dist = config.params.dist
    stats = bin_stats(
        records, config.bins, (dist.v_lb, dist.v_ub), config.params.lanes
    )
    return records, stats


def _run(config: SimConfig, misreport: bool) -> List[UserRecord]:
    if not any(config.params.arrival_probs):
        raise DomainError("no lane has a positive arrival rate; nobody to serve")
    rng = np.random.default_rng(config.seed)
    world = new_world(config, misreport=misreport)
    while len(world.records) < config.users:
        step(world, rng)
    assert world.arrivals == len(world.records) + world.queued()
    return world.records


@dataclass
class BinnedStats:
    """Uniform true-value bins: counts and means, overall and per lane."""

    edges: np.ndarray
    count: np.ndarray
    mean_experienced: np.ndarray
    mean_expected: np.ndarray
    mean_payment: np.ndarray
    mean_cost: np.ndarray
    lane_count: np.ndarray
    lane_mean_experienced: np.ndarray
    lane_mean_expected: np.ndarray
    lane_mean_payment: np.ndarray
    lane_mean_cost: np.ndarray


def _mean_by_bin(
    values: np.ndarray, bin_idx: np.ndarray, counts: np.ndarray, bins: int
) -> np.ndarray:
    sums = np.bincount(bin_idx, weights=values, minlength=bins)
    with np.errstate(invalid="ignore"):
        return np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)


def bin_stats(
    records: Sequence[UserRecord],
    bins: int,
    value_range: Tuple[float, float],
    lanes: int,
) -> BinnedStats:
    """Arithmetic per-bin means of the recorded quantities."""
    if bins < 1:
        raise DomainError("bins must be positive")
    lo, hi = value_range
    edges = np.linspace(lo, hi, bins + 1)
    true_v = np.array([r.true_value for r in records])
    idx = np.clip(((true_v - lo) / (hi - lo) * bins).astype(int), 0, bins - 1)
    lane = np.array([r.lane for r in records], dtype=int)
    columns = {
        "experienced": np.array([r.experienced_wait for r in records]),
        "expected": np.array([r.expected_wait for r in records]),
        "payment": np.array([r.payment for r in records]),
        "cost": np.array([r.generalized_cost for r in records]),
    }
    count = np.bincount(idx, minlength=bins) if len(records) else np.zeros(bins, int)
    means = {k: _mean_by_bin(v, idx, count, bins) for k, v in columns.items()}
    lane_count = np.zeros((lanes, bins), dtype=int)
    lane_means = {k: np.full((lanes, bins), np.nan) for k in columns}
    for ln in range(lanes):
        mask = lane == ln
        lane_count[ln] = (
            np.bincount(idx[mask], minlength=bins) if mask.any() else 0
        )
        for k, v in columns.items():
            lane_means[k][ln] = _mean_by_bin(
                v[mask], idx[mask], lane_count[ln], bins
            )
    return BinnedStats(
        edges=edges,
        count=count,
        mean_experienced=means["experienced"],
        mean_expected=means["expected"],
        mean_payment=means["payment"],
        mean_cost=means["cost"],
        lane_count=lane_count,
        lane_mean_experienced=lane_means["experienced"],
        lane_mean_expected=lane_means["expected"],
        lane_mean_payment=lane_means["payment"],
        lane_mean_cost=lane_means["cost"],
    )


@dataclass
class SweepResult:
    """Misreport grid: relative realized generalized cost vs the truthful
    diagonal cell of the same true-value row, as a fraction (0.01 = 1%)."""

    true_edges: np.ndarray
    declared_edges: np.ndarray
    relative: np.ndarray
    count: np.ndarray
    lane_relative: np.ndarray
    lane_count: np.ndarray
    records: List[UserRecord]


def misreport_sweep(config: SimConfig) -> SweepResult:
    """Run with declared bids drawn uniformly, independent of true values.

    Independent uniform declares keep the population bid law the chains
    assume; cells compare each (true bin, declared bin) mean realized cost
    to the row's truthful diagonal cell.
    """
    if config.sweep is None:
        raise DomainError("config.sweep must be set for a misreport sweep")
    records = _run(config, misreport=True)
    dist = config.params.dist
    lanes = config.params.lanes
    nt, nd = config.sweep.true_bins, config.sweep.declared_bins
    lo, hi = dist.v_lb, dist.v_ub
    true_edges = np.linspace(lo, hi, nt + 1)
    declared_edges = np.linspace(lo, hi, nd + 1)

    true_v = np.array([r.true_value for r in records])
    declared = np.array([r.declared for r in records])
    cost = np.array([r.generalized_cost for r in records])
    lane = np.array([r.lane for r in records], dtype=int)
    ti = np.clip(((true_v - lo) / (hi - lo) * nt).astype(int), 0, nt - 1)
    di = np.clip(((declared - lo) / (hi - lo) * nd).astype(int), 0, nd - 1)

    def grids(mask: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        flat = ti[mask] * nd + di[mask]
        count = np.bincount(flat, minlength=nt * nd).reshape(nt, nd)
        sums = np.bincount(flat, weights=cost[mask], minlength=nt * nd)
        with np.errstate(invalid="ignore"):
            mean = np.where(
                count.reshape(-1) > 0,
                sums / np.maximum(count.reshape(-1), 1),
                np.nan,
            ).reshape(nt, nd)
        rel = np.full((nt, nd), np.nan)
        for t in range(nt):
            center = 0.5 * (true_edges[t] + true_edges[t + 1])
            d_diag = min(int((center - lo) / (hi - lo) * nd), nd - 1)
            base = mean[t, d_diag]
            if np.isfinite(base) and base != 0.0:
                rel[t] = (mean[t] - base) / base
        return rel, count

    relative, count = grids(np.ones(len(records), dtype=bool))
    lane_relative = np.full((lanes, nt, nd), np.nan)
    lane_count = np.zeros((lanes, nt, nd), dtype=int)
    for ln in range(lanes):
        lane_relative[ln], lane_count[ln] = grids(lane == ln)
    return SweepResult(
        true_edges=true_edges,
        declared_edges=declared_edges,
        relative=relative,
        count=count,
        lane_relative=lane_relative,
        lane_count=lane_count,
        records=records,
    )


def random_snapshot(
    rng: np.random.Generator,
    params: IntersectionParams,
    occupancy: float = 0.5,
) -> PricingSnapshot:
    """Random pricing queue: each non-focal lane occupied with `occupancy`,
    bids drawn from the value distribution.  Bench and property-test helper."""
    focal = int(rng.integers(params.lanes))
    occupants = {
        j: float(params.dist.sample(rng))
        for j in range(params.lanes)
        if j != focal and rng.random() < occupancy
    }
    return PricingSnapshot(
        focal_lane=focal,
        focal_bid=float(params.dist.sample(rng)),
        occupants=occupants,
    )
