"""Average experienced waiting time against delay cost, one series per
arrival probability (the Fig. 5 family)."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from .common import SchemaError, fail, read_rows

REQUIRED = ["bin_low_per_hour", "bin_high_per_hour", "lane", "count",
            "mean_experienced_wait_s"]


def load_series(path: Path):
    rows = [r for r in read_rows(path, REQUIRED) if r["lane"] == "all"]
    xs, ys = [], []
    for r in rows:
        if int(r["count"]) == 0:
            continue
        xs.append(0.5 * (float(r["bin_low_per_hour"]) + float(r["bin_high_per_hour"])))
        ys.append(float(r["mean_experienced_wait_s"]))
    return np.array(xs), np.array(ys)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("inputs", nargs="+", metavar="LABEL=BINS_CSV",
                        help="bins.csv tagged with its arrival probability")
    parser.add_argument("--out", type=Path, default=Path("waiting.png"))
    args = parser.parse_args(argv)

    fig, ax = plt.subplots(figsize=(6, 4.5))
    try:
        for spec in args.inputs:
            label, _, path = spec.partition("=")
            if not path:
                path, label = label, Path(label).stem
            xs, ys = load_series(Path(path))
            ax.plot(xs, ys, marker="o", markersize=3, label=f"p = {label}")
    except SchemaError as exc:
        return fail(str(exc))
    ax.set_xlabel("delay cost ($/hour)")
    ax.set_ylabel("average experienced waiting time (s)")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
