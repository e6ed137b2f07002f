"""Average per-user pricing runtime against lane count, log scale, one
series per mechanism with 95% confidence envelopes (the Fig. 11 family)."""

from __future__ import annotations

import argparse
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from .common import SchemaError, fail, read_rows

REQUIRED = ["lanes", "mechanism", "mean_s", "ci95_s"]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("input", metavar="RUNTIME_CSV")
    parser.add_argument("--out", type=Path, default=Path("runtime.png"))
    args = parser.parse_args(argv)

    try:
        rows = read_rows(Path(args.input), REQUIRED)
    except SchemaError as exc:
        return fail(str(exc))
    series = defaultdict(list)
    for r in rows:
        series[r["mechanism"]].append(
            (int(r["lanes"]), float(r["mean_s"]), float(r["ci95_s"]))
        )
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for mech, pts in sorted(series.items()):
        pts.sort()
        lanes = np.array([p[0] for p in pts])
        mean = np.array([p[1] for p in pts])
        ci = np.array([p[2] for p in pts])
        ax.plot(lanes, mean, marker="o", label=mech)
        lower = np.maximum(mean - ci, 1e-9)
        ax.fill_between(lanes, lower, mean + ci, alpha=0.25)
    ax.set_yscale("log")
    ax.set_xlabel("lanes")
    ax.set_ylabel("average runtime per user (s)")
    ax.legend()
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
