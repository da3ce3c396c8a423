"""Self-contained CSV readers for the simulator's delimited outputs.

The figures package never calls into the physics core; these readers
are the only coupling, via the documented column layouts.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


class FigureInputError(Exception):
    """Unusable input: empty file, missing column, malformed row."""


SIMULATE_REQUIRED = ("t", "rho11", "rho22", "rho33", "reF1", "reF2", "J1", "J2")
SWEEP_REQUIRED = ("gamma1", "gamma2", "duration", "direction")
INTERVAL_REQUIRED = ("t_start", "t_end", "direction")


def read_table(
    path: Path | str, required: tuple[str, ...], allow_empty: bool = False
) -> dict[str, np.ndarray]:
    """Read a delimited table into float columns, checking requirements."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FigureInputError(f"{path}: {exc}") from exc
    lines = [line for line in text.splitlines() if line]
    if not lines:
        raise FigureInputError(f"{path}: empty input")
    header = lines[0].split(",")
    for column in required:
        if column not in header:
            raise FigureInputError(f"{path}: missing column {column!r}")
    if len(lines) == 1 and not allow_empty:
        raise FigureInputError(f"{path}: no data rows")
    columns: dict[str, list[float]] = {name: [] for name in header}
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != len(header):
            raise FigureInputError(f"{path}: ragged row {line!r}")
        for name, cell in zip(header, cells):
            try:
                columns[name].append(float(cell))
            except ValueError:
                columns[name].append(np.nan)  # non-numeric extras (regime)
    return {name: np.asarray(vals) for name, vals in columns.items()}


def read_intervals(path: Path | str) -> dict[str, np.ndarray]:
    # a run with no unidirectional windows ships a header-only sidecar
    return read_table(path, INTERVAL_REQUIRED, allow_empty=True)
