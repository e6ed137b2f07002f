"""Command-line front end: price quotes, simulations, sweeps, benchmarks.

All outputs are CSV.  Money is printed in cents with 2 decimals, times in
seconds with 4 decimals; per-step bid rates keep 6 decimals.  Exit codes:
0 success, 2 usage/config error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .model import (
    BidDistribution,
    DomainError,
    IntersectionParams,
    PriceQuote,
    PricingSnapshot,
    cents_per_step,
    dollars_per_hour,
)
from .pricing import LaneModel, QueueModel, quote, static_quote
from .simulate import (
    BinnedStats,
    MechanismKind,
    SimConfig,
    SweepSpec,
    SweepResult,
    misreport_sweep,
    random_snapshot,
    run,
)

PRICE_HEADER = [
    "wait_s",
    "wait_min_bid_s",
    "busy_s",
    "before_s",
    "after_s",
    "mb_cents",
    "ma_cents",
    "payment_cents",
    "cost_cents",
]

USERS_HEADER = [
    "true_value",
    "declared",
    "arrival_step",
    "service_step",
    "experienced_wait",
    "expected_wait",
    "payment",
    "generalized_cost",
    "lane",
]

BINS_HEADER = [
    "bin_index",
    "bin_low_per_hour",
    "bin_high_per_hour",
    "lane",
    "count",
    "mean_experienced_wait_s",
    "mean_expected_wait_s",
    "mean_payment_cents",
    "mean_cost_cents",
]

HEATMAP_HEADER = ["true_bin_low", "declared_bin_low", "relative_cost_pct", "count"]

RUNTIME_HEADER = ["lanes", "mechanism", "mean_s", "ci95_s"]


class UsageError(Exception):
    pass


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DomainError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="intersection-auction",
        description="Online incentive-compatible intersection auction pricing",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    price = sub.add_parser("price", help="quote one user against a snapshot")
    _common_intersection_flags(price)
    price.add_argument("--occupant", action="append", default=[], metavar="LANE=RATE",
                       help="occupied lane and its hourly rate; repeatable")
    price.add_argument("--true-rate", type=float, required=True,
                       help="true value of time, currency per hour")
    price.add_argument("--declared-rate", type=float,
                       help="declared rate; defaults to the true rate")
    price.add_argument("--focal-lane", type=int,
                       help="lane of the priced user; default lowest empty lane")
    price.set_defaults(func=cmd_price)

    sim = sub.add_parser("simulate", help="run the discrete-time simulation")
    _common_sim_flags(sim)
    sim.set_defaults(func=cmd_simulate)

    sweep = sub.add_parser("sweep", help="misreport sweep over declared bids")
    _common_sim_flags(sweep)
    sweep.add_argument("--true-bins", type=int, default=30)
    sweep.add_argument("--declared-bins", type=int, default=30)
    sweep.add_argument("--per-lane", action="store_true",
                       help="also write heatmap_lane<j>.csv per lane")
    sweep.set_defaults(func=cmd_sweep)

    states = sub.add_parser("states", help="state counts of both chain models")
    states.add_argument("--lanes", type=int, required=True)
    states.set_defaults(func=cmd_states)

    bench = sub.add_parser("bench", help="time pricing over random snapshots")
    bench.add_argument("--lanes", type=int, nargs="+", default=[4, 5, 6, 7, 8])
    bench.add_argument("--mechanisms", nargs="+",
                       choices=[m.value for m in MechanismKind],
                       default=[m.value for m in MechanismKind])
    bench.add_argument("--snapshots", type=int, default=100)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--arrival-prob", type=float, default=0.25)
    bench.add_argument("--out", type=Path, default=Path("."))
    bench.set_defaults(func=cmd_bench)
    return parser


def _common_intersection_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lanes", type=int, default=4)
    p.add_argument("--mechanism", choices=[m.value for m in MechanismKind],
                   default="queue")
    p.add_argument("--arrival-prob", type=float, action="append", default=None,
                   help="single shared value, or one per lane (repeat)")
    p.add_argument("--value-low", type=float, default=5.0,
                   help="lower value-of-time bound, currency per hour")
    p.add_argument("--value-high", type=float, default=10.0)
    p.add_argument("--step-seconds", type=float, default=1.0)


def _common_sim_flags(p: argparse.ArgumentParser) -> None:
    _common_intersection_flags(p)
    p.add_argument("--config", type=Path, help="JSON config; overrides flags")
    p.add_argument("--users", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bins", type=int, default=30)
    p.add_argument("--out", type=Path, default=Path("."))


def _arrival_probs(values: Optional[List[float]], lanes: int) -> tuple:
    if not values:
        values = [0.25]
    if len(values) == 1:
        return (float(values[0]),) * lanes
    if len(values) != lanes:
        raise UsageError(f"--arrival-prob needs 1 or {lanes} values, got {len(values)}")
    return tuple(float(v) for v in values)


def _params_from_args(args) -> IntersectionParams:
    dist = BidDistribution.uniform_hourly(args.value_low, args.value_high,
                                          args.step_seconds)
    return IntersectionParams(
        lanes=args.lanes,
        step_cost=args.step_seconds,
        arrival_probs=_arrival_probs(args.arrival_prob, args.lanes),
        dist=dist,
    )


def _sim_config_from_args(args, sweep: Optional[SweepSpec] = None) -> SimConfig:
    if args.config is not None:
        return load_config(args.config, sweep_override=sweep)
    return SimConfig(
        params=_params_from_args(args),
        mechanism=MechanismKind(args.mechanism),
        users=args.users,
        seed=args.seed,
        bins=args.bins,
        sweep=sweep,
    )


def load_config(path: Path, sweep_override: Optional[SweepSpec] = None) -> SimConfig:
    """JSON config with keys lanes, step_seconds, arrival_probs,
    value_low_per_hour, value_high_per_hour, mechanism, users, seed, bins,
    sweep {true_bins, declared_bins}."""
    raw = json.loads(Path(path).read_text())
    try:
        dist = BidDistribution.uniform_hourly(
            raw["value_low_per_hour"], raw["value_high_per_hour"],
            raw["step_seconds"],
        )
        params = IntersectionParams(
            lanes=int(raw["lanes"]),
            step_cost=float(raw["step_seconds"]),
            arrival_probs=tuple(raw["arrival_probs"]),
            dist=dist,
        )
        sweep = sweep_override
        if sweep is None and "sweep" in raw:
            sweep = SweepSpec(
                true_bins=int(raw["sweep"]["true_bins"]),
                declared_bins=int(raw["sweep"]["declared_bins"]),
            )
        return SimConfig(
            params=params,
            mechanism=MechanismKind(raw["mechanism"]),
            users=int(raw["users"]),
            seed=int(raw["seed"]),
            bins=int(raw.get("bins", 30)),
            sweep=sweep,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad config {path}: {exc!r}") from exc


def cmd_price(args) -> int:
    params = _params_from_args(args)
    step = args.step_seconds
    occupants = {}
    for spec in args.occupant:
        try:
            lane_s, rate_s = spec.split("=", 1)
            lane, rate = int(lane_s), float(rate_s)
        except ValueError as exc:
            raise UsageError(f"bad --occupant {spec!r}: want LANE=RATE") from exc
        if not 0 <= lane < args.lanes:
            raise UsageError(f"occupant lane {lane} out of range")
        if lane in occupants:
            raise UsageError(f"lane {lane} occupied twice")
        occupants[lane] = cents_per_step(rate, step)
    focal = args.focal_lane
    if focal is None:
        free = [j for j in range(args.lanes) if j not in occupants]
        if not free:
            raise UsageError("all lanes occupied; give --focal-lane")
        focal = free[0]
    declared_rate = args.declared_rate if args.declared_rate is not None else args.true_rate
    declared = cents_per_step(declared_rate, step)
    true = cents_per_step(args.true_rate, step)
    snap = PricingSnapshot(focal_lane=focal, focal_bid=declared, occupants=occupants)

    mech = MechanismKind(args.mechanism)
    if mech == MechanismKind.STATIC:
        q = static_quote(snap, declared, true, params)
    elif mech == MechanismKind.QUEUE:
        q = quote(QueueModel(params.mean_arrival_prob), snap, declared, true, params)
    else:
        probs = tuple(params.arrival_probs[j] for j in range(args.lanes) if j != focal)
        q = quote(LaneModel(probs), snap, declared, true, params)

    writer = csv.writer(sys.stdout)
    writer.writerow(PRICE_HEADER)
    writer.writerow(_quote_row(q))
    return 0


def _quote_row(q: PriceQuote) -> List[str]:
    times = [q.wait, q.wait_min_bid, q.busy, q.before, q.after]
    money = [q.mb, q.ma, q.payment, q.generalized_cost]
    return [f"{t:.4f}" for t in times] + [f"{m:.2f}" for m in money]


def cmd_simulate(args) -> int:
    config = _sim_config_from_args(args)
    records, stats = run(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_users(out / "users.csv", records)
    _write_bins(out / "bins.csv", stats, config)
    mean_wait = float(np.mean([r.experienced_wait for r in records]))
    mean_pay = float(np.mean([r.payment for r in records]))
    print(
        f"serviced={len(records)} mechanism={config.mechanism.value} "
        f"mean_wait_s={mean_wait:.4f} mean_payment_cents={mean_pay:.2f}"
    )
    return 0


def _write_users(path: Path, records) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(USERS_HEADER)
        for r in records:
            w.writerow([
                f"{r.true_value:.6f}",
                f"{r.declared:.6f}",
                r.arrival_step,
                r.service_step,
                f"{r.experienced_wait:.4f}",
                f"{r.expected_wait:.4f}",
                f"{r.payment:.2f}",
                f"{r.generalized_cost:.2f}",
                r.lane,
            ])


def _write_bins(path: Path, stats: BinnedStats, config: SimConfig) -> None:
    step = config.params.step_cost
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BINS_HEADER)
        rows = [("all", stats.count, stats.mean_experienced, stats.mean_expected,
                 stats.mean_payment, stats.mean_cost)]
        for ln in range(config.params.lanes):
            rows.append((str(ln), stats.lane_count[ln],
                         stats.lane_mean_experienced[ln],
                         stats.lane_mean_expected[ln],
                         stats.lane_mean_payment[ln],
                         stats.lane_mean_cost[ln]))
        for lane_label, count, m_exp, m_expd, m_pay, m_cost in rows:
            for i in range(len(count)):
                w.writerow([
                    i,
                    f"{dollars_per_hour(stats.edges[i], step):.6f}",
                    f"{dollars_per_hour(stats.edges[i + 1], step):.6f}",
                    lane_label,
                    int(count[i]),
                    f"{m_exp[i]:.4f}",
                    f"{m_expd[i]:.4f}",
                    f"{m_pay[i]:.2f}",
                    f"{m_cost[i]:.2f}",
                ])


def cmd_sweep(args) -> int:
    sweep = SweepSpec(true_bins=args.true_bins, declared_bins=args.declared_bins)
    config = _sim_config_from_args(args, sweep=sweep)
    if config.sweep is None:
        config = SimConfig(config.params, config.mechanism, config.users,
                           config.seed, config.bins, sweep)
    result = misreport_sweep(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_heatmap(out / "heatmap.csv", result, None, config)
    if args.per_lane:
        for ln in range(config.params.lanes):
            _write_heatmap(out / f"heatmap_lane{ln}.csv", result, ln, config)
    worst = float(np.nanmin(result.relative))
    print(
        f"serviced={len(result.records)} mechanism={config.mechanism.value} "
        f"min_relative_cost_pct={100 * worst:.2f}"
    )
    return 0


def _write_heatmap(path: Path, result: SweepResult, lane: Optional[int],
                   config: SimConfig) -> None:
    step = config.params.step_cost
    rel = result.relative if lane is None else result.lane_relative[lane]
    count = result.count if lane is None else result.lane_count[lane]
    nt, nd = rel.shape
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HEATMAP_HEADER)
        for t in range(nt):
            for d in range(nd):
                w.writerow([
                    f"{dollars_per_hour(result.true_edges[t], step):.6f}",
                    f"{dollars_per_hour(result.declared_edges[d], step):.6f}",
                    f"{100 * rel[t, d]:.4f}" if np.isfinite(rel[t, d]) else "nan",
                    int(count[t, d]),
                ])


def cmd_states(args) -> int:
    if args.lanes < 2:
        raise UsageError("--lanes must be at least 2")
    q_count = args.lanes * (args.lanes + 1) // 2
    z_count = 3 ** (args.lanes - 1)
    writer = csv.writer(sys.stdout)
    writer.writerow(["lanes", "queue_states", "lane_states"])
    writer.writerow([args.lanes, q_count, z_count])
    return 0


def cmd_bench(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for lanes in args.lanes:
        dist = BidDistribution.uniform_hourly(5.0, 10.0, 1.0)
        params = IntersectionParams(
            lanes=lanes, step_cost=1.0,
            arrival_probs=(args.arrival_prob,) * lanes, dist=dist,
        )
        rng = np.random.default_rng(args.seed)
        snaps = [random_snapshot(rng, params) for _ in range(args.snapshots)]
        for mech in args.mechanisms:
            times = []
            for snap in snaps:
                t0 = time.perf_counter()
                if mech == "static":
                    static_quote(snap, snap.focal_bid, snap.focal_bid, params)
                elif mech == "queue":
                    quote(QueueModel(args.arrival_prob), snap,
                          snap.focal_bid, snap.focal_bid, params)
                else:
                    probs = tuple(
                        params.arrival_probs[j]
                        for j in range(lanes) if j != snap.focal_lane
                    )
                    quote(LaneModel(probs), snap, snap.focal_bid,
                          snap.focal_bid, params)
                times.append(time.perf_counter() - t0)
            mean = float(np.mean(times))
            ci95 = float(1.96 * np.std(times, ddof=1) / np.sqrt(len(times)))
            rows.append([lanes, mech, f"{mean:.6f}", f"{ci95:.6f}"])
            print(f"lanes={lanes} mechanism={mech} mean_s={mean:.6f}")
    with (out / "runtime.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RUNTIME_HEADER)
        w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
