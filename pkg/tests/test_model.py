import pytest
from hypothesis import given, strategies as st

from intersection_auction import (
    BidDistribution,
    DomainError,
    Occupancy,
    PricingSnapshot,
    QueueState,
    bid_from_hourly_rate,
    cdf,
    cents_per_step,
    classify_lane,
    classify_queue,
    map_lane_to_queue,
)

E, L, H = Occupancy.EMPTY, Occupancy.LOWER, Occupancy.HIGHER


class TestCdf:
    def test_support_bounds(self, dist):
        assert cdf(dist, dist.v_lb) == 0.0
        assert cdf(dist, dist.v_ub) == 1.0

    def test_interior_value(self, dist, bids):
        assert cdf(dist, bids[7.0]) == pytest.approx(0.4)

    def test_out_of_support_raises(self, dist):
        with pytest.raises(DomainError):
            cdf(dist, dist.v_ub * 1.5)
        with pytest.raises(DomainError):
            cdf(dist, dist.v_lb * 0.5)

    def test_bad_bounds_raise(self):
        with pytest.raises(DomainError):
            BidDistribution(v_lb=2.0, v_ub=1.0)
        with pytest.raises(DomainError):
            BidDistribution(v_lb=0.0, v_ub=1.0)

    @given(st.floats(min_value=0.0, max_value=1.0))
    def test_nondecreasing(self, t):
        d = BidDistribution(0.1, 0.4)
        v = d.v_lb + t * (d.v_ub - d.v_lb)
        assert 0.0 <= d.cdf(v) <= 1.0


class TestBidConversion:
    def test_paper_rate(self):
        # $7/hr over a 1 s step is 0.19 cents to two decimals
        assert cents_per_step(7.0, 1.0) == pytest.approx(7 / 3600 * 100)
        assert round(cents_per_step(7.0, 1.0), 2) == 0.19

    def test_round_number(self):
        assert cents_per_step(36.0, 1.0) == pytest.approx(1.0)

    def test_same_unit_passthrough(self):
        assert bid_from_hourly_rate(3600.0, 1.0) == pytest.approx(1.0)

    def test_nonpositive_raises(self):
        with pytest.raises(DomainError):
            bid_from_hourly_rate(0.0, 1.0)
        with pytest.raises(DomainError):
            bid_from_hourly_rate(5.0, -1.0)


class TestClassification:
    def test_example_queue_state(self, bids):
        snap = PricingSnapshot(0, bids[7.0], {1: 0.25, 2: 0.15})
        assert classify_queue(snap, cents_per_step(7.0, 1.0), 3) == QueueState(1, 0)

    def test_all_empty(self, bids):
        snap = PricingSnapshot(0, bids[7.0], {})
        assert classify_queue(snap, bids[7.0], 4) == QueueState(0, 3)

    def test_all_higher(self, bids):
        snap = PricingSnapshot(0, bids[5.0], {1: 0.2, 2: 0.2, 3: 0.25})
        assert classify_queue(snap, bids[5.0], 4) == QueueState(0, 0)

    def test_example_lane_state(self, bids):
        snap = PricingSnapshot(0, bids[7.0], {1: 0.25, 2: 0.15})
        assert classify_lane(snap, bids[7.0], 3) == (H, L)
        flipped = PricingSnapshot(0, bids[7.0], {1: 0.15, 2: 0.25})
        assert classify_lane(flipped, bids[7.0], 3) == (L, H)

    def test_both_empty(self, bids):
        snap = PricingSnapshot(1, bids[7.0], {})
        assert classify_lane(snap, bids[7.0], 3) == (E, E)

    def test_tie_counts_higher(self):
        snap = PricingSnapshot(0, 0.2, {1: 0.2})
        assert classify_lane(snap, 0.2, 3) == (H, E)

    def test_override_rules(self):
        snap = PricingSnapshot(0, 0.2, {1: 0.25})
        assert classify_lane(snap, 0.2, 3, override=(1, L)) == (L, E)
        with pytest.raises(DomainError):
            classify_lane(snap, 0.2, 3, override=(2, H))  # lane 2 empty

    def test_focal_lane_cannot_be_occupied(self):
        with pytest.raises(DomainError):
            PricingSnapshot(1, 0.2, {1: 0.25})


class TestLaneToQueueMap:
    def test_example_pair(self):
        assert map_lane_to_queue((H, L)) == QueueState(1, 0)

    def test_all_empty(self):
        assert map_lane_to_queue((E, E)) == QueueState(0, 2)

    def test_all_lower(self):
        assert map_lane_to_queue((L, L)) == QueueState(2, 0)


@st.composite
def snapshots(draw):
    lanes = draw(st.integers(min_value=2, max_value=6))
    focal = draw(st.integers(min_value=0, max_value=lanes - 1))
    occupants = {}
    for j in range(lanes):
        if j != focal and draw(st.booleans()):
            occupants[j] = draw(
                st.floats(min_value=0.1, max_value=0.4, allow_nan=False)
            )
    v = draw(st.floats(min_value=0.1, max_value=0.4, allow_nan=False))
    return PricingSnapshot(focal, v, occupants), v, lanes


@given(snapshots())
def test_lane_then_map_matches_queue(data):
    snap, v, lanes = data
    assert map_lane_to_queue(classify_lane(snap, v, lanes)) == classify_queue(
        snap, v, lanes
    )


@given(snapshots())
def test_minimal_bid_never_sees_lower(data):
    snap, _, lanes = data
    assert classify_queue(snap, 0.1, lanes).lower == 0


@given(snapshots())
def test_lane_partition_covers_all_lanes(data):
    snap, v, lanes = data
    q = classify_queue(snap, v, lanes)
    higher = len(snap.occupants) - q.lower
    assert q.lower + q.empty + higher == lanes - 1
