import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from intersection_auction import (
    DomainError,
    IntersectionParams,
    LaneModel,
    Occupancy,
    PricingSnapshot,
    QueueModel,
    after_component,
    before_component,
    busy_period,
    classify_lane,
    classify_queue,
    lane_wait_tables,
    quote,
    queue_wait_tables,
    static_quote,
    wait_at,
)
from intersection_auction.lane_chain import encode
from intersection_auction.queue_chain import state_index
from intersection_auction.simulate import random_snapshot

E, L, H = Occupancy.EMPTY, Occupancy.LOWER, Occupancy.HIGHER
EX2_PROBS = (0.5, 1 / 6)

# Exact solver outputs for the worked three-lane example (focal $7/hr, one
# $8/hr higher bidder, one $6/hr lower bidder), frozen after cross-checking
# against the finite-difference oracle below and the Monte-Carlo oracles.
QUEUE_ROW = dict(
    wait=1.25, wait_min=4.125, b=1.9337979094076656, mb=0.3222996515679443,
    a=0.9412020905923335, ma=0.14578063412513417,
)
LANE_ROW_HL = dict(
    wait=10 / 7, wait_min=4.2, b=1.6539870386024225, mb=0.27566450643373713,
    a=1.1174415328261489, ma=0.17593997261771732,
)
LANE_ROW_LH = dict(
    wait=10 / 9, wait_min=4.2, b=2.1668075514229352, mb=0.3611345919038226,
    a=0.9220813374659538, ma=0.14082892224304916,
)


def ma_finite_difference(model, snap, v, params, slices=2000):
    """Independent MA oracle: numerically differentiate the segment-fixed
    wait function on a dense grid and Riemann-sum -W'(u) u du."""
    dist = params.dist
    span = dist.v_ub - dist.v_lb
    bounds = [dist.v_lb]
    for _, bid in snap.lower_bidders(v):
        if bid > bounds[-1]:
            bounds.append(bid)
    bounds.append(v)

    def tables(F):
        if isinstance(model, QueueModel):
            return queue_wait_tables(params.lanes, model.p, F, params.step_cost)
        return lane_wait_tables(params.lanes, model.lane_probs, F, params.step_cost)

    total = 0.0
    for a, b in zip(bounds[:-1], bounds[1:]):
        if b <= a:
            continue
        mid = 0.5 * (a + b)
        if isinstance(model, QueueModel):
            col = state_index(params.lanes)[classify_queue(snap, mid, params.lanes)]
        else:
            col = encode(classify_lane(snap, mid, params.lanes))
        width = (b - a) / slices
        xs = np.linspace(a + width / 2, b - width / 2, slices)
        h = width / 64.0
        Fp = (xs + h - dist.v_lb) / span
        Fm = (xs - h - dist.v_lb) / span
        deriv = (tables(Fp)[:, col] - tables(Fm)[:, col]) / (2 * h)
        total += float(np.sum(-deriv * xs) * width)
    return total


class TestWaitAt:
    def test_worked_example(self, params3, example_snapshot, bids):
        model = QueueModel(1 / 3)
        assert wait_at(model, example_snapshot, bids[7.0], params3) == (
            pytest.approx(1.25, abs=1e-9)
        )

    def test_minimal_bid_sees_no_lower(self, params3, example_snapshot, dist):
        model = QueueModel(1 / 3)
        w = wait_at(model, example_snapshot, dist.v_lb, params3)
        _, w_min, _ = busy_period(model, example_snapshot, dist.v_lb, params3)
        assert w == pytest.approx(w_min, abs=1e-12)

    def test_override_orders_waits(self, params3, bids):
        # forcing the occupant higher cannot shorten the wait
        snap = PricingSnapshot(0, bids[6.0], {1: bids[6.0], 2: bids[8.0]})
        model = QueueModel(1 / 3)
        hi = wait_at(model, snap, bids[6.0], params3, override=(1, H))
        lo = wait_at(model, snap, bids[6.0], params3, override=(1, L))
        assert hi > lo

    def test_override_empty_lane_raises(self, params3, bids):
        snap = PricingSnapshot(0, bids[7.0], {1: bids[8.0]})
        with pytest.raises(DomainError):
            wait_at(QueueModel(1 / 3), snap, bids[7.0], params3, override=(2, H))

    def test_lane_model_worked_example(self, params3, example_snapshot, bids):
        model = LaneModel(EX2_PROBS)
        assert wait_at(model, example_snapshot, bids[7.0], params3) == (
            pytest.approx(10 / 7, abs=1e-9)
        )


class TestBusyPeriod:
    def test_queue_row(self, params3, example_snapshot, bids):
        w, w_min, busy = busy_period(QueueModel(1 / 3), example_snapshot,
                                     bids[7.0], params3)
        assert w == pytest.approx(QUEUE_ROW["wait"], abs=1e-9)
        assert w_min == pytest.approx(QUEUE_ROW["wait_min"], abs=1e-9)
        assert busy == pytest.approx(w_min - w, abs=1e-12)

    def test_lane_rows(self, params3, example_snapshot, bids):
        w, w_min, busy = busy_period(LaneModel(EX2_PROBS), example_snapshot,
                                     bids[7.0], params3)
        assert w == pytest.approx(LANE_ROW_HL["wait"], abs=1e-9)
        assert w_min == pytest.approx(4.2, abs=1e-9)
        assert busy == pytest.approx(w_min - w, abs=1e-12)

    def test_minimal_bid_busy_zero(self, params3, example_snapshot, dist):
        _, _, busy = busy_period(QueueModel(1 / 3), example_snapshot,
                                 dist.v_lb, params3)
        assert busy == pytest.approx(0.0, abs=1e-12)


class TestBeforeComponent:
    def test_queue_row(self, params3, example_snapshot, bids):
        b, mb = before_component(QueueModel(1 / 3), example_snapshot,
                                 bids[7.0], params3)
        assert b == pytest.approx(QUEUE_ROW["b"], abs=1e-9)
        assert mb == pytest.approx(QUEUE_ROW["mb"], abs=1e-9)

    def test_lane_rows(self, params3, example_snapshot, bids):
        b, mb = before_component(LaneModel(EX2_PROBS), example_snapshot,
                                 bids[7.0], params3)
        assert b == pytest.approx(LANE_ROW_HL["b"], abs=1e-9)
        assert mb == pytest.approx(LANE_ROW_HL["mb"], abs=1e-9)
        flipped = PricingSnapshot(0, bids[7.0], {1: bids[6.0], 2: bids[8.0]})
        b2, mb2 = before_component(LaneModel(EX2_PROBS), flipped, bids[7.0], params3)
        assert b2 == pytest.approx(LANE_ROW_LH["b"], abs=1e-9)
        assert mb2 == pytest.approx(LANE_ROW_LH["mb"], abs=1e-9)

    def test_no_lower_bidders(self, params3, bids):
        snap = PricingSnapshot(0, bids[6.0], {1: bids[8.0]})
        assert before_component(QueueModel(1 / 3), snap, bids[6.0], params3) == (
            0.0, 0.0,
        )


class TestAfterComponent:
    def test_queue_row(self, params3, example_snapshot, bids):
        a, ma = after_component(QueueModel(1 / 3), example_snapshot,
                                bids[7.0], params3)
        assert a == pytest.approx(QUEUE_ROW["a"], abs=1e-9)
        assert ma == pytest.approx(QUEUE_ROW["ma"], abs=1e-7)

    def test_lane_rows(self, params3, example_snapshot, bids):
        a, ma = after_component(LaneModel(EX2_PROBS), example_snapshot,
                                bids[7.0], params3)
        assert a == pytest.approx(LANE_ROW_HL["a"], abs=1e-9)
        assert ma == pytest.approx(LANE_ROW_HL["ma"], abs=1e-7)

    def test_minimal_bid_vanishes(self, params3, example_snapshot, dist):
        a, ma = after_component(QueueModel(1 / 3), example_snapshot,
                                dist.v_lb, params3)
        assert a == pytest.approx(0.0, abs=1e-12)
        assert ma == 0.0

    @pytest.mark.parametrize(
        "model,expected",
        [
            (QueueModel(1 / 3), QUEUE_ROW["ma"]),
            (LaneModel(EX2_PROBS), LANE_ROW_HL["ma"]),
        ],
    )
    def test_matches_finite_difference_oracle(
        self, params3, example_snapshot, bids, model, expected
    ):
        fd = ma_finite_difference(model, example_snapshot, bids[7.0], params3)
        assert fd == pytest.approx(expected, abs=5e-5)
        _, ma = after_component(model, example_snapshot, bids[7.0], params3)
        assert ma == pytest.approx(fd, abs=5e-5)

    def test_fd_oracle_on_random_snapshots(self, params4):
        rng = np.random.default_rng(31)
        model = QueueModel(0.25)
        for _ in range(5):
            snap = random_snapshot(rng, params4)
            _, ma = after_component(model, snap, snap.focal_bid, params4)
            fd = ma_finite_difference(model, snap, snap.focal_bid, params4)
            assert ma == pytest.approx(fd, abs=5e-5)


class TestQuote:
    def test_queue_row_assembly(self, params3, example_snapshot, bids):
        q = quote(QueueModel(1 / 3), example_snapshot, bids[7.0], bids[7.0], params3)
        assert q.payment == pytest.approx(q.mb + q.ma, abs=1e-12)
        assert q.busy == pytest.approx(q.before + q.after, abs=1e-12)
        assert q.payment == pytest.approx(
            QUEUE_ROW["mb"] + QUEUE_ROW["ma"], abs=1e-7
        )
        assert q.generalized_cost == pytest.approx(
            bids[7.0] * 1.25 + q.payment, abs=1e-12
        )

    def test_lane_rows_assembly(self, params3, example_snapshot, bids):
        q = quote(LaneModel(EX2_PROBS), example_snapshot, bids[7.0], bids[7.0],
                  params3)
        assert q.payment == pytest.approx(
            LANE_ROW_HL["mb"] + LANE_ROW_HL["ma"], abs=1e-7
        )
        flipped = PricingSnapshot(0, bids[7.0], {1: bids[6.0], 2: bids[8.0]})
        q2 = quote(LaneModel(EX2_PROBS), flipped, bids[7.0], bids[7.0], params3)
        assert q2.payment == pytest.approx(
            LANE_ROW_LH["mb"] + LANE_ROW_LH["ma"], abs=1e-7
        )

    def test_minimal_bid_pays_nothing(self, params3, example_snapshot, dist, bids):
        q = quote(QueueModel(1 / 3), example_snapshot, dist.v_lb, bids[7.0], params3)
        assert q.payment == 0.0
        assert q.before == 0.0 and q.after == pytest.approx(0.0, abs=1e-12)

    def test_payment_monotone_in_declared(self, params3, example_snapshot, dist):
        vs = np.linspace(dist.v_lb, dist.v_ub, 20)
        for model in (QueueModel(1 / 3), LaneModel(EX2_PROBS)):
            pays = [
                quote(model, example_snapshot, v, v, params3).payment for v in vs
            ]
            assert all(b - a >= -1e-9 for a, b in zip(pays, pays[1:]))

    def test_wait_smooth_within_segment(self, params3, example_snapshot, bids):
        # between the lower bid and the focal bid the state is fixed and the
        # wait decreases continuously
        vs = np.linspace(bids[6.0] + 1e-6, bids[7.0], 30)
        model = QueueModel(1 / 3)
        waits = [wait_at(model, example_snapshot, v, params3) for v in vs]
        diffs = np.diff(waits)
        assert (diffs <= 1e-12).all()
        assert np.max(np.abs(diffs)) < 0.01


class TestProposition2:
    @pytest.mark.parametrize("lanes", [3, 4, 5])
    def test_before_bounded_by_busy_spot(self, dist, lanes):
        params = IntersectionParams(lanes, 1.0, (0.3,) * lanes, dist)
        rng = np.random.default_rng(lanes)
        for _ in range(150):
            snap = random_snapshot(rng, params)
            w, w_min, busy = busy_period(QueueModel(0.3), snap, snap.focal_bid,
                                         params)
            b, mb = before_component(QueueModel(0.3), snap, snap.focal_bid, params)
            assert b <= busy + 1e-9
            assert b >= -1e-12 and mb >= -1e-12


class TestStaticQuote:
    def test_lower_bid_sum(self, dist):
        params = IntersectionParams(3, 1.0, (0.25,) * 3, dist)
        snap = PricingSnapshot(0, 0.19, {1: 0.16, 2: 0.18})
        q = static_quote(snap, 0.19, 0.19, params)
        assert q.payment == pytest.approx(0.34, abs=1e-12)
        assert q.wait == 0.0
        assert q.before == q.busy and q.after == 0.0

    def test_front_of_order(self, params4, bids):
        snap = PricingSnapshot(0, bids[10.0], {1: bids[6.0], 2: bids[7.0], 3: bids[8.0]})
        q = static_quote(snap, bids[10.0], bids[10.0], params4)
        assert q.wait == 0.0
        assert q.payment == pytest.approx(bids[6.0] + bids[7.0] + bids[8.0])

    def test_rank_wait(self, params4, bids):
        snap = PricingSnapshot(0, bids[6.0], {1: bids[7.0], 2: bids[8.0]})
        q = static_quote(snap, bids[6.0], bids[6.0], params4)
        assert q.wait == 2.0
        assert q.payment == 0.0

    def test_agrees_with_dynamic_when_no_future_arrivals(self, dist):
        # p = 0 collapses the chain payment to the static VCG sum
        params = IntersectionParams(4, 1.0, (0.0,) * 4, dist)
        rng = np.random.default_rng(17)
        for _ in range(25):
            snap = random_snapshot(rng, params)
            dyn = quote(QueueModel(0.0), snap, snap.focal_bid, snap.focal_bid,
                        params)
            sta = static_quote(snap, snap.focal_bid, snap.focal_bid, params)
            assert dyn.payment == pytest.approx(sta.payment, abs=1e-8)
            assert dyn.wait == pytest.approx(sta.wait, abs=1e-9)
