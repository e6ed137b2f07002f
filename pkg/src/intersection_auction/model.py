"""Domain types for the single-server intersection auction.

An intersection with Q access lanes services one user per time period, in
decreasing order of declared per-step delay cost (the bid).  Everything a
pricing mechanism needs to know about the world at quote time is captured by
a :class:`PricingSnapshot`: which non-focal lanes are occupied and at what
declared bid.  Relative to a focal bid v, each non-focal lane is Empty,
Lower (occupant bids less than v) or Higher; the two Markov chain models
track either the per-lane labels (:class:`LaneState`) or just the counts
(:class:`QueueState`).

Bids are money-per-step values; the package convention is cents per service
step.  Display rounding to two decimals happens at the edges only.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

SECONDS_PER_HOUR = 3600.0
CENTS_PER_DOLLAR = 100.0


class DomainError(ValueError):
    """An argument violates an operation's documented domain."""


class DistributionKind(enum.Enum):
    UNIFORM = "uniform"


@dataclass(frozen=True)
class BidDistribution:
    """Value-of-time law F on [v_lb, v_ub], in money-per-step units."""

    v_lb: float
    v_ub: float
    kind: DistributionKind = DistributionKind.UNIFORM

    def __post_init__(self) -> None:
        if not (0.0 < self.v_lb < self.v_ub):
            raise DomainError(
                f"support bounds must satisfy 0 < v_lb < v_ub, got "
                f"({self.v_lb}, {self.v_ub})"
            )

    def cdf(self, v: float) -> float:
        """P(bid <= v). Domain error outside the support."""
        if v < self.v_lb or v > self.v_ub:
            raise DomainError(f"bid {v} outside support [{self.v_lb}, {self.v_ub}]")
        return (v - self.v_lb) / (self.v_ub - self.v_lb)

    def sample(self, rng: np.random.Generator, size: Optional[int] = None):
        return rng.uniform(self.v_lb, self.v_ub, size=size)

    @classmethod
    def uniform_hourly(
        cls, low_per_hour: float, high_per_hour: float, step_seconds: float
    ) -> "BidDistribution":
        """Build from hourly dollar rates; bounds come out in cents per step."""
        return cls(
            v_lb=cents_per_step(low_per_hour, step_seconds),
            v_ub=cents_per_step(high_per_hour, step_seconds),
        )


def cdf(dist: BidDistribution, v: float) -> float:
    return dist.cdf(v)


def bid_from_hourly_rate(rate: float, step_seconds: float) -> float:
    """Per-step value of an hourly rate, in the same currency unit as `rate`."""
    if rate <= 0.0 or step_seconds <= 0.0:
        raise DomainError("rate and step_seconds must be positive")
    return rate * step_seconds / SECONDS_PER_HOUR


def cents_per_step(dollars_per_hour: float, step_seconds: float) -> float:
    return bid_from_hourly_rate(dollars_per_hour * CENTS_PER_DOLLAR, step_seconds)


def dollars_per_hour(cents_step: float, step_seconds: float) -> float:
    return cents_step / CENTS_PER_DOLLAR * SECONDS_PER_HOUR / step_seconds


@dataclass(frozen=True)
class IntersectionParams:
    """Static description of the intersection and its user population."""

    lanes: int
    step_cost: float
    arrival_probs: Tuple[float, ...]
    dist: BidDistribution

    def __post_init__(self) -> None:
        if self.lanes < 2:
            raise DomainError("an intersection needs at least 2 lanes")
        if self.step_cost <= 0.0:
            raise DomainError("step_cost must be positive")
        probs = tuple(float(p) for p in self.arrival_probs)
        if any(p < 0.0 or p > 1.0 for p in probs):
            raise DomainError("arrival probabilities must lie in [0, 1]")
        object.__setattr__(self, "arrival_probs", probs)

    @property
    def mean_arrival_prob(self) -> float:
        return float(np.mean(self.arrival_probs))


class QueueState(NamedTuple):
    """Count state (lower-bidder lanes, empty lanes); terminal when they
    cover all Q-1 non-focal lanes."""

    lower: int
    empty: int

    def is_terminal(self, lanes: int) -> bool:
        return self.lower + self.empty == lanes - 1

    def validate(self, lanes: int) -> None:
        if self.lower < 0 or self.empty < 0 or self.lower + self.empty > lanes - 1:
            raise DomainError(f"{self} is not a state of a {lanes}-lane intersection")


class Occupancy(enum.IntEnum):
    """Label of a non-focal lane relative to a focal bid."""

    EMPTY = 0
    LOWER = 1
    HIGHER = 2


# A lane-based chain state: one label per non-focal lane, canonical order.
LaneState = Tuple[Occupancy, ...]


def lane_state_terminal(z: LaneState) -> bool:
    return Occupancy.HIGHER not in z


@dataclass(frozen=True)
class PricingSnapshot:
    """The pricing queue a quote is computed against.

    `occupants` maps lane index -> declared bid for every occupied non-focal
    lane; at most one user per lane.  `focal_bid` is the declared bid of the
    user being priced.
    """

    focal_lane: int
    focal_bid: float
    occupants: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.focal_lane in self.occupants:
            raise DomainError("focal lane cannot also hold an occupant")
        object.__setattr__(self, "occupants", dict(self.occupants))

    def non_focal_lanes(self, lanes: int) -> Tuple[int, ...]:
        """Canonical lane order: ascending index, skipping the focal lane."""
        if not 0 <= self.focal_lane < lanes:
            raise DomainError(f"focal lane {self.focal_lane} out of range")
        for j in self.occupants:
            if not 0 <= j < lanes:
                raise DomainError(f"occupant lane {j} out of range")
        return tuple(j for j in range(lanes) if j != self.focal_lane)

    def lower_bidders(self, v: float) -> Tuple[Tuple[int, float], ...]:
        """(lane, bid) of occupants bidding strictly below v, ascending by bid."""
        pairs = [(j, b) for j, b in self.occupants.items() if b < v]
        return tuple(sorted(pairs, key=lambda jb: (jb[1], jb[0])))


def classify_queue(snap: PricingSnapshot, v: float, lanes: int) -> QueueState:
    """Count state seen by a user bidding v: occupants below v are lower,
    ties count as higher."""
    snap.non_focal_lanes(lanes)
    lower = sum(1 for b in snap.occupants.values() if b < v)
    empty = (lanes - 1) - len(snap.occupants)
    return QueueState(lower=lower, empty=empty)


def classify_lane(
    snap: PricingSnapshot,
    v: float,
    lanes: int,
    override: Optional[Tuple[int, Occupancy]] = None,
) -> LaneState:
    """Per-lane labels in canonical order; `override` forces one occupied
    lane's label regardless of the bid comparison."""
    if override is not None:
        lane_j, forced = override
        if lane_j not in snap.occupants:
            raise DomainError(f"override lane {lane_j} is not occupied")
        if forced == Occupancy.EMPTY:
            raise DomainError("cannot override a lane to Empty")
    entries = []
    for j in snap.non_focal_lanes(lanes):
        if override is not None and j == override[0]:
            entries.append(override[1])
        elif j not in snap.occupants:
            entries.append(Occupancy.EMPTY)
        elif snap.occupants[j] < v:
            entries.append(Occupancy.LOWER)
        else:
            entries.append(Occupancy.HIGHER)
    return tuple(entries)


def map_lane_to_queue(z: Sequence[Occupancy]) -> QueueState:
    """The count mapping h: lower/empty tallies of a lane state."""
    return QueueState(
        lower=sum(1 for e in z if e == Occupancy.LOWER),
        empty=sum(1 for e in z if e == Occupancy.EMPTY),
    )


@dataclass(frozen=True)
class PriceQuote:
    """Full mechanism output for one user.

    Times in seconds, money in cents.  `busy` is the remaining busy period
    (wait at the minimal bid minus actual wait), split into `before` (impact
    on current lower bidders) and `after` (impact on future arrivals);
    `payment = mb + ma` is the expected marginal cost, and
    `generalized_cost` is true-value x expected wait + payment.
    """

    wait: float
    wait_min_bid: float
    busy: float
    before: float
    after: float
    mb: float
    ma: float
    payment: float
    generalized_cost: float
