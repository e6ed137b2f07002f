"""Average user payments against delay cost, with per-lane series when the
bins file carries lane rows (the Fig. 6-10 family)."""

from __future__ import annotations

import argparse
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt

from .common import SchemaError, fail, read_rows

REQUIRED = ["bin_low_per_hour", "bin_high_per_hour", "lane", "count",
            "mean_payment_cents"]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("inputs", nargs="+", metavar="LABEL=BINS_CSV")
    parser.add_argument("--out", type=Path, default=Path("payments.png"))
    parser.add_argument("--per-lane", action="store_true",
                        help="plot lane rows instead of the overall series")
    parser.add_argument("--mark", metavar="RATE=CENTS", action="append",
                        default=[], help="overlay a reference point")
    args = parser.parse_args(argv)

    fig, ax = plt.subplots(figsize=(6, 4.5))
    try:
        for spec in args.inputs:
            label, _, path = spec.partition("=")
            if not path:
                path, label = label, Path(label).stem
            rows = read_rows(Path(path), REQUIRED)
            series = defaultdict(list)
            for r in rows:
                lane = r["lane"]
                if args.per_lane and lane == "all":
                    continue
                if not args.per_lane and lane != "all":
                    continue
                if int(r["count"]) == 0:
                    continue
                mid = 0.5 * (float(r["bin_low_per_hour"])
                             + float(r["bin_high_per_hour"]))
                series[lane].append((mid, float(r["mean_payment_cents"])))
            for lane, pts in sorted(series.items()):
                pts.sort()
                name = label if lane == "all" else f"{label} lane {lane}"
                ax.plot(*zip(*pts), marker="o", markersize=3, label=name)
    except SchemaError as exc:
        return fail(str(exc))
    for mark in args.mark:
        rate, _, cents = mark.partition("=")
        ax.plot([float(rate)], [float(cents)], marker="*", markersize=14,
                color="black", linestyle="none", label=f"reference {mark}")
    ax.set_xlabel("delay cost ($/hour)")
    ax.set_ylabel("average payment (cents)")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
