"""Shared fixtures: the three-lane worked example used throughout the paper's
calculations (U($5,$10)/hr values, 1 s service steps, focal user at $7/hr,
one $8/hr higher bidder, one $6/hr lower bidder)."""

import pytest

from intersection_auction import (
    BidDistribution,
    IntersectionParams,
    PricingSnapshot,
    cents_per_step,
)

RATE_LOW = 5.0
RATE_HIGH = 10.0
STEP = 1.0


@pytest.fixture(scope="session")
def dist():
    return BidDistribution.uniform_hourly(RATE_LOW, RATE_HIGH, STEP)


@pytest.fixture(scope="session")
def params3(dist):
    return IntersectionParams(
        lanes=3, step_cost=STEP, arrival_probs=(1 / 3,) * 3, dist=dist
    )


@pytest.fixture(scope="session")
def params4(dist):
    return IntersectionParams(
        lanes=4, step_cost=STEP, arrival_probs=(0.25,) * 4, dist=dist
    )


@pytest.fixture(scope="session")
def bids():
    return {r: cents_per_step(r, STEP) for r in (5.0, 6.0, 7.0, 8.0, 10.0)}


@pytest.fixture(scope="session")
def example_snapshot(bids):
    """Focal $7/hr user on lane 0; $8/hr on lane 1, $6/hr on lane 2."""
    return PricingSnapshot(
        focal_lane=0, focal_bid=bids[7.0], occupants={1: bids[8.0], 2: bids[6.0]}
    )
