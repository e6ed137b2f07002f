"""CSV loading shared by the plotting scripts.

The scripts consume only the documented file schemas (bins.csv,
heatmap.csv, runtime.csv) and never call the pricing library, so the two
packages stay independently testable.
"""

from __future__ import annotations

import csv
import sys
from pathlib import Path
from typing import Dict, List

import matplotlib

matplotlib.use("Agg")


class SchemaError(Exception):
    pass


def read_rows(path: Path, required: List[str]) -> List[Dict[str, str]]:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{path}: no such file")
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1
