"""CSV interchange: one observation per row, a version/seed comment line first."""

from __future__ import annotations

import csv
import math
import re
from pathlib import Path

import numpy as np

from .errors import SchemaError

__all__ = [
    "TRACE_COLUMNS",
    "JEFF_COLUMNS",
    "MU_COLUMNS",
    "SWEEP_MU_COLUMNS",
    "SATURATION_COLUMNS",
    "write_csv",
    "read_csv",
    "format_value",
]

TRACE_COLUMNS = ("delta_mhz", "amplitude", "control_state", "duration_ns", "p_excited", "p_leakage")
TRACE_REQUIRED = TRACE_COLUMNS[:5]
JEFF_COLUMNS = (
    "row", "delta_mhz", "amplitude", "jeff_mhz", "jeff_ci95", "f_pi_mhz", "f_0_mhz",
    "slope", "slope_ci95", "saturation", "saturation_ci95", "prefix_len",
)
MU_COLUMNS = ("delta_mhz", "mu_closed", "mu_matrix_h1", "mu_matrix_h2", "mu_numeric", "flags")
SWEEP_MU_COLUMNS = ("delta_mhz", "mu_measured", "mu_measured_ci95", "mu_closed", "mu_numeric")
SATURATION_COLUMNS = ("delta_mhz", "level_mhz", "level_ci95", "sign", "exceeds_j")

_SEED = re.compile(r"seed=(-?\d+)")


def format_value(v) -> str:
    """Shortest text that reads back to the same value."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def write_csv(path, columns, rows, seed: int, version: str | None = None) -> Path:
    from . import __version__

    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(f"# crosskit {version or __version__} seed={int(seed)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format_value(v) for v in row])
    return path


def read_csv(path, required=()) -> tuple[dict, int | None]:
    """Columns of a crosskit CSV as string lists, plus the recorded seed.

    Raises :class:`SchemaError` naming the first missing required column.
    """
    path = Path(path)
    seed = None
    with path.open(newline="") as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                m = _SEED.search(line)
                if m and seed is None:
                    seed = int(m.group(1))
                continue
            if line.strip():
                lines.append(line)
    if not lines:
        raise SchemaError(f"{path}: no header row")
    reader = csv.reader(lines)
    header = [h.strip() for h in next(reader)]
    for col in required:
        if col not in header:
            raise SchemaError(f"{path}: missing column {col!r}")
    cols = {h: [] for h in header}
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise SchemaError(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
        for h, v in zip(header, row):
            cols[h].append(v.strip())
    return cols, seed


def float_column(cols: dict, name: str) -> np.ndarray:
    try:
        return np.array([float(v.replace("−", "-")) for v in cols[name]], dtype=float)
    except ValueError as exc:
        raise SchemaError(f"column {name!r}: {exc}") from None
