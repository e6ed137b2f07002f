"""Relative generalized-cost heatmap over (true, declared) bins, diverging
colors clipped at +/-10% (the Fig. 4 / Fig. 9 family)."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from .common import SchemaError, fail, read_rows

REQUIRED = ["true_bin_low", "declared_bin_low", "relative_cost_pct", "count"]
CLIP_PCT = 10.0


def load_grid(path: Path):
    rows = read_rows(Path(path), REQUIRED)
    true_lows = sorted({float(r["true_bin_low"]) for r in rows})
    declared_lows = sorted({float(r["declared_bin_low"]) for r in rows})
    t_idx = {v: i for i, v in enumerate(true_lows)}
    d_idx = {v: i for i, v in enumerate(declared_lows)}
    grid = np.full((len(true_lows), len(declared_lows)), np.nan)
    for r in rows:
        value = r["relative_cost_pct"]
        grid[t_idx[float(r["true_bin_low"])], d_idx[float(r["declared_bin_low"])]] = (
            float(value) if value not in ("", "nan") else np.nan
        )
    return np.array(true_lows), np.array(declared_lows), grid


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("input", metavar="HEATMAP_CSV")
    parser.add_argument("--out", type=Path, default=Path("heatmap.png"))
    parser.add_argument("--title", default=None)
    args = parser.parse_args(argv)

    try:
        true_lows, declared_lows, grid = load_grid(Path(args.input))
    except SchemaError as exc:
        return fail(str(exc))
    clipped = np.clip(grid, -CLIP_PCT, CLIP_PCT)
    fig, ax = plt.subplots(figsize=(6, 5))
    mesh = ax.imshow(
        clipped,
        cmap="RdBu",
        vmin=-CLIP_PCT,
        vmax=CLIP_PCT,
        aspect="auto",
        extent=(
            declared_lows[0],
            2 * declared_lows[-1] - declared_lows[-2] if len(declared_lows) > 1
            else declared_lows[0] + 1,
            2 * true_lows[-1] - true_lows[-2] if len(true_lows) > 1
            else true_lows[0] + 1,
            true_lows[0],
        ),
    )
    fig.colorbar(mesh, ax=ax, label="relative generalized cost (%)")
    ax.set_xlabel("declared delay cost ($/hour)")
    ax.set_ylabel("true delay cost ($/hour)")
    if args.title:
        ax.set_title(args.title)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    negative = int(np.sum(grid < -2.0))
    print(f"wrote {args.out} (cells below -2%: {negative})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
