"""Online incentive-compatible pricing for single-server intersection auctions."""

from .model import (
    BidDistribution,
    DistributionKind,
    DomainError,
    IntersectionParams,
    LaneState,
    Occupancy,
    PriceQuote,
    PricingSnapshot,
    QueueState,
    bid_from_hourly_rate,
    cdf,
    cents_per_step,
    classify_lane,
    classify_queue,
    dollars_per_hour,
    map_lane_to_queue,
)
from .numerics import (
    DivergenceError,
    QuadratureWarning,
    SingularSystemError,
    integrate_segment,
    matrix_sampler,
    mc_absorb_oracle,
    solve_dense,
)
from .queue_chain import (
    queue_states,
    queue_transition_matrix,
    queue_transition_prob,
    queue_wait,
    queue_wait_tables,
)
from .lane_chain import (
    encode,
    lane_states,
    lane_transition_matrices,
    lane_transition_prob,
    lane_wait,
    lane_wait_tables,
)
from .pricing import (
    LaneModel,
    QueueModel,
    WaitModel,
    after_component,
    before_component,
    busy_period,
    quote,
    static_quote,
    wait_at,
)
from .simulate import (
    BinnedStats,
    MechanismKind,
    SimConfig,
    SweepResult,
    SweepSpec,
    UserRecord,
    World,
    bin_stats,
    misreport_sweep,
    new_world,
    random_snapshot,
    run,
    step,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
