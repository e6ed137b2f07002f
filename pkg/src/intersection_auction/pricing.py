"""Expected-marginal-cost payments over either waiting-time model.

The remaining busy period of a user bidding v is the extra wait the same
user would face at the minimal bid.  It splits into the delay imposed on the
lower bidders already in the pricing queue (B, priced at their declared
values: MB) and the delay imposed on future arrivals (A, priced by
integrating -dW/dv * v across the bid range below v: MA).  The wait function
W(v) is smooth between consecutive lower-bidder bids, where the
classification state is constant, and jumps exactly where MB's overrides
account for the crossings; MA therefore integrates segment by segment, by
parts, with the segment-fixed state.

The static baseline prices only the present queue: rank wait, payment equal
to the sum of lower bids.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from . import lane_chain, queue_chain
from .model import (
    DomainError,
    IntersectionParams,
    Occupancy,
    PriceQuote,
    PricingSnapshot,
    classify_lane,
    classify_queue,
    map_lane_to_queue,
)
from .numerics import SIMPSON_SUBINTERVALS, integrate_segment


@dataclass(frozen=True)
class QueueModel:
    """Count-state waiting model with one shared arrival probability."""

    p: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise DomainError("arrival probability must lie in [0, 1]")


@dataclass(frozen=True)
class LaneModel:
    """Per-lane waiting model; probabilities in canonical non-focal order."""

    lane_probs: Tuple[float, ...]

    def __post_init__(self) -> None:
        probs = tuple(float(p) for p in self.lane_probs)
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise DomainError("lane probabilities must lie in [0, 1]")
        object.__setattr__(self, "lane_probs", probs)


WaitModel = Union[QueueModel, LaneModel]

Override = Tuple[int, Occupancy]


class _QuoteContext:
    """Per-quote evaluator: classification plus cached chain tables.

    Wait tables are cached by classification state and bid quantile within a
    single quote only; nothing leaks across snapshots.
    """

    def __init__(
        self, model: WaitModel, snap: PricingSnapshot, params: IntersectionParams
    ):
        self.model = model
        self.snap = snap
        self.params = params
        self.lanes = params.lanes
        snap.non_focal_lanes(params.lanes)
        dist = params.dist
        for j, bid in snap.occupants.items():
            if not dist.v_lb <= bid <= dist.v_ub:
                raise DomainError(f"occupant bid {bid} on lane {j} out of support")
        if isinstance(model, LaneModel) and len(model.lane_probs) != self.lanes - 1:
            raise DomainError(
                f"LaneModel needs {self.lanes - 1} probabilities, got "
                f"{len(model.lane_probs)}"
            )
        self._cache: Dict[tuple, float] = {}

    def quantile(self, v) -> np.ndarray:
        dist = self.params.dist
        v = np.asarray(v, dtype=float)
        if (v < dist.v_lb - 1e-12).any() or (v > dist.v_ub + 1e-12).any():
            raise DomainError("bid outside the distribution support")
        return np.clip((v - dist.v_lb) / (dist.v_ub - dist.v_lb), 0.0, 1.0)

    def _state_key(self, v: float, override: Optional[Override]):
        if isinstance(self.model, QueueModel):
            if override is None:
                return classify_queue(self.snap, v, self.lanes)
            lane_j, forced = override
            if lane_j not in self.snap.occupants:
                raise DomainError(f"override lane {lane_j} is not occupied")
            base = classify_queue(
                PricingSnapshot(
                    self.snap.focal_lane,
                    self.snap.focal_bid,
                    {j: b for j, b in self.snap.occupants.items() if j != lane_j},
                ),
                v,
                self.lanes,
            )
            extra = 1 if forced == Occupancy.LOWER else 0
            return base._replace(lower=base.lower + extra, empty=base.empty - 1)
        return classify_lane(self.snap, v, self.lanes, override)

    def _tables(self, F: np.ndarray) -> np.ndarray:
        if isinstance(self.model, QueueModel):
            return queue_chain.queue_wait_tables(
                self.lanes, self.model.p, F, self.params.step_cost
            )
        return lane_chain.lane_wait_tables(
            self.lanes, self.model.lane_probs, F, self.params.step_cost
        )

    def _column(self, state) -> int:
        if isinstance(self.model, QueueModel):
            return queue_chain.state_index(self.lanes)[state]
        return lane_chain.encode(state)

    def wait_vec(self, state, vs: np.ndarray) -> np.ndarray:
        """Waits of one fixed state across a vector of hypothetical bids."""
        return self._tables(self.quantile(vs))[:, self._column(state)]

    def wait_at(self, v: float, override: Optional[Override] = None) -> float:
        state = self._state_key(v, override)
        key = (state, float(v))
        if key not in self._cache:
            self._cache[key] = float(self.wait_vec(state, np.array([v]))[0])
        return self._cache[key]

    def wait_min_bid(self) -> float:
        """Wait at the minimal bid: every occupied lane higher, F = 0."""
        state = self._state_key(self.params.dist.v_lb, None)
        if isinstance(self.model, QueueModel):
            table = queue_chain.queue_wait_zero_bid(
                self.lanes, self.model.p, self.params.step_cost
            )
        else:
            table = lane_chain.lane_wait_zero_bid(
                self.lanes, self.model.lane_probs, self.params.step_cost
            )
        return float(table[self._column(state)])

    def before(self, v: float) -> Tuple[float, float]:
        """Busy-period share and marginal cost for present lower bidders.

        For each lower bidder, the same wait table at that bidder's quantile
        provides both override states.
        """
        lower = self.snap.lower_bidders(v)
        if not lower:
            return 0.0, 0.0
        F = self.quantile(np.array([bid for _, bid in lower]))
        tables = self._tables(F)
        b_total = 0.0
        mb_total = 0.0
        for row, (lane_j, bid) in enumerate(lower):
            hi = tables[row, self._column(self._state_key(bid, (lane_j, Occupancy.HIGHER)))]
            lo = tables[row, self._column(self._state_key(bid, (lane_j, Occupancy.LOWER)))]
            gap = float(hi - lo)
            b_total += gap
            mb_total += gap * bid
        return b_total, mb_total

    def future_marginal_cost(self, v: float) -> float:
        """MA: integral of -W'(u) u over each constant-state bid segment."""
        return self.ma_and_wait(v)[0]

    def ma_and_wait(self, v: float) -> Tuple[float, float]:
        """(MA, expected wait at v) from one batched chain evaluation.

        Every segment's Simpson grid is solved in one chain call; by parts
        each segment contributes W(a) a - W(b) b + int W.  The last node of
        the last segment is v itself under the same classification state, so
        the user's own expected wait falls out for free.
        """
        v_lb = self.params.dist.v_lb
        segments = []
        if v > v_lb:
            bounds = [v_lb]
            for _, bid in self.snap.lower_bidders(v):
                if bid > bounds[-1]:
                    bounds.append(bid)
            bounds.append(v)
            segments = [
                (a, b, self._state_key(0.5 * (a + b), None))
                for a, b in zip(bounds[:-1], bounds[1:])
                if b > a
            ]
        if not segments:
            return 0.0, self.wait_min_bid()
        n_nodes = 2 * SIMPSON_SUBINTERVALS + 1
        grids = [np.linspace(a, b, n_nodes) for a, b, _ in segments]
        tables = self._tables(self.quantile(np.concatenate(grids)))
        total = 0.0
        wait = 0.0
        for i, ((a, b, state), xs) in enumerate(zip(segments, grids)):
            ys = tables[i * n_nodes : (i + 1) * n_nodes, self._column(state)]

            def integrand(vs: np.ndarray, xs=xs, ys=ys) -> np.ndarray:
                if not np.array_equal(vs, xs):
                    raise AssertionError("quadrature grid mismatch")
                return ys

            integral = integrate_segment(integrand, a, b)
            total += float(ys[0]) * a - float(ys[-1]) * b + integral
            wait = float(ys[-1])
        return total, wait


def wait_at(
    model: WaitModel,
    snap: PricingSnapshot,
    v: float,
    params: IntersectionParams,
    override: Optional[Override] = None,
) -> float:
    """Expected wait of a user bidding v against the snapshot, with an
    optional forced classification for one occupied lane."""
    return _QuoteContext(model, snap, params).wait_at(v, override)


def busy_period(
    model: WaitModel, snap: PricingSnapshot, v: float, params: IntersectionParams
) -> Tuple[float, float, float]:
    """(wait, wait at minimal bid, remaining busy period)."""
    ctx = _QuoteContext(model, snap, params)
    w = ctx.wait_at(v)
    w_min = ctx.wait_min_bid()
    return w, w_min, w_min - w


def before_component(
    model: WaitModel, snap: PricingSnapshot, v: float, params: IntersectionParams
) -> Tuple[float, float]:
    """(B, MB): delay imposed on present lower bidders and its cost."""
    return _QuoteContext(model, snap, params).before(v)


def after_component(
    model: WaitModel, snap: PricingSnapshot, v: float, params: IntersectionParams
) -> Tuple[float, float]:
    """(A, MA): busy-period remainder for future arrivals and its cost."""
    ctx = _QuoteContext(model, snap, params)
    w = ctx.wait_at(v)
    w_min = ctx.wait_min_bid()
    b_total, _ = ctx.before(v)
    return w_min - w - b_total, ctx.future_marginal_cost(v)


def quote(
    model: WaitModel,
    snap: PricingSnapshot,
    v_declared: float,
    v_true: float,
    params: IntersectionParams,
) -> PriceQuote:
    """Assemble the full price quote for a declared bid."""
    ctx = _QuoteContext(model, snap, params)
    ma, w = ctx.ma_and_wait(v_declared)
    w_min = ctx.wait_min_bid()
    busy = w_min - w
    b_total, mb = ctx.before(v_declared)
    payment = mb + ma
    return PriceQuote(
        wait=w,
        wait_min_bid=w_min,
        busy=busy,
        before=b_total,
        after=busy - b_total,
        mb=mb,
        ma=ma,
        payment=payment,
        generalized_cost=v_true * w + payment,
    )


def static_quote(
    snap: PricingSnapshot,
    v_declared: float,
    v_true: float,
    params: IntersectionParams,
) -> PriceQuote:
    """Static VCG baseline: rank wait, payment the sum of lower bids.

    Each lower bidder is delayed exactly one service step, so with bids in
    money-per-step the payment is their plain sum; future arrivals are
    ignored entirely.
    """
    dist = params.dist
    for j, bid in snap.occupants.items():
        if not dist.v_lb <= bid <= dist.v_ub:
            raise DomainError(f"occupant bid {bid} on lane {j} out of support")
    state = classify_queue(snap, v_declared, params.lanes)
    higher = (params.lanes - 1) - state.lower - state.empty
    wait = higher * params.step_cost
    payment = sum(bid for _, bid in snap.lower_bidders(v_declared))
    busy = state.lower * params.step_cost
    return PriceQuote(
        wait=wait,
        wait_min_bid=wait + busy,
        busy=busy,
        before=busy,
        after=0.0,
        mb=payment,
        ma=0.0,
        payment=payment,
        generalized_cost=v_true * wait + payment,
    )
