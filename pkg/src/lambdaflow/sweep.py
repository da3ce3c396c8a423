"""Parallel evaluation of duration/direction maps over 2-D parameter grids.

Each grid cell is an independent coefficient run followed by interval
detection, so cells are distributed over a thread pool (the integration
kernels release the GIL). Results are assembled by cell index, which
makes the output identical for any worker count. Per-cell failures are
recorded and never abort the map.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .coefficients import IntegratorConfig
from .errors import ValidationError
from .flow import DEFAULT_EPS, DEFAULT_MIN_LEN, duration_map_point
from .model import BathSpec, ModelSpec

AXIS_GAMMA1 = "gamma1"
AXIS_GAMMA2 = "gamma2"
AXIS_COUPLING1 = "coupling1"
AXIS_COUPLING2 = "coupling2"
AXIS_GAMMA_DIFF = "gamma_diff"  # sets gamma1 = gamma2 + value, applied last

_AXIS_NAMES = (
    AXIS_GAMMA1,
    AXIS_GAMMA2,
    AXIS_COUPLING1,
    AXIS_COUPLING2,
    AXIS_GAMMA_DIFF,
)


@dataclass(frozen=True)
class SweepGrid:
    """2-D grid of model parameters plus everything a cell run needs."""

    axis1_name: str
    axis1_values: np.ndarray
    axis2_name: str
    axis2_values: np.ndarray
    base_model: ModelSpec
    cfg: IntegratorConfig
    eps: float = DEFAULT_EPS
    min_len: float = DEFAULT_MIN_LEN

    def __post_init__(self) -> None:
        for name in (self.axis1_name, self.axis2_name):
            if name not in _AXIS_NAMES:
                raise ValidationError(f"unknown sweep axis {name!r}")
        if self.axis1_name == self.axis2_name:
            raise ValidationError("sweep axes must differ")
        for name, values in (
            (self.axis1_name, self.axis1_values),
            (self.axis2_name, self.axis2_values),
        ):
            arr = np.asarray(values, float)
            if arr.ndim != 1 or len(arr) == 0:
                raise ValidationError(f"axis {name!r} must be a 1-D value list")
            if not np.all(np.diff(arr) > 0):
                raise ValidationError(f"axis {name!r} values must strictly increase")
            if name in (AXIS_GAMMA1, AXIS_GAMMA2) and arr[0] <= 0:
                raise ValidationError(f"axis {name!r} values must be positive")
            if name in (AXIS_COUPLING1, AXIS_COUPLING2) and arr[0] < 0:
                raise ValidationError(f"axis {name!r} values must be >= 0")
        object.__setattr__(self, "axis1_values", np.asarray(self.axis1_values, float))
        object.__setattr__(self, "axis2_values", np.asarray(self.axis2_values, float))

    def model_at(self, i: int, j: int) -> ModelSpec:
        """Resolve the cell model; gamma_diff axes are applied after the rest."""
        settings = [
            (self.axis1_name, float(self.axis1_values[i])),
            (self.axis2_name, float(self.axis2_values[j])),
        ]
        settings.sort(key=lambda kv: kv[0] == AXIS_GAMMA_DIFF)
        model = self.base_model
        for name, value in settings:
            model = _apply_axis(model, name, value)
        return model


def _apply_axis(model: ModelSpec, name: str, value: float) -> ModelSpec:
    left, right = model.bath_left, model.bath_right
    if name == AXIS_GAMMA1:
        left = BathSpec(gamma=value, coupling=left.coupling, kernel=left.kernel)
    elif name == AXIS_GAMMA2:
        right = BathSpec(gamma=value, coupling=right.coupling, kernel=right.kernel)
    elif name == AXIS_COUPLING1:
        left = BathSpec(gamma=left.gamma, coupling=value, kernel=left.kernel)
    elif name == AXIS_COUPLING2:
        right = BathSpec(gamma=right.gamma, coupling=value, kernel=right.kernel)
    elif name == AXIS_GAMMA_DIFF:
        left = BathSpec(
            gamma=right.gamma + value, coupling=left.coupling, kernel=left.kernel
        )
    return replace(model, bath_left=left, bath_right=right)


@dataclass
class SweepResult:
    """Duration/direction matrices indexed [axis1, axis2], plus failures."""

    grid: SweepGrid
    durations: np.ndarray
    directions: np.ndarray
    failures: list[tuple[int, int, str]] = field(default_factory=list)


def run_sweep(grid: SweepGrid, workers: int = 1) -> SweepResult:
    """Evaluate the first-occurrence duration map over the whole grid.

    The result is independent of the worker count: every cell is a pure
    function of its own parameters and lands in its own matrix slot.
    Failed cells get duration 0 / direction 0 and a failure record.
    """
    n1, n2 = len(grid.axis1_values), len(grid.axis2_values)
    durations = np.zeros((n1, n2), float)
    directions = np.zeros((n1, n2), np.int8)
    failures: list[tuple[int, int, str]] = []

    def cell(idx: tuple[int, int]):
        i, j = idx
        try:
            model = grid.model_at(i, j)
            dur, direc = duration_map_point(
                model, grid.cfg, eps=grid.eps, min_len=grid.min_len
            )
            return i, j, dur, direc, None
        except Exception as exc:  # record-and-continue per cell
            return i, j, 0.0, 0, f"{type(exc).__name__}: {exc}"

    indices = [(i, j) for i in range(n1) for j in range(n2)]
    if workers <= 1:
        results = map(cell, indices)
        for i, j, dur, direc, err in results:
            durations[i, j] = dur
            directions[i, j] = direc
            if err is not None:
                failures.append((i, j, err))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for i, j, dur, direc, err in pool.map(cell, indices, chunksize=8):
                durations[i, j] = dur
                directions[i, j] = direc
                if err is not None:
                    failures.append((i, j, err))

    failures.sort(key=lambda rec: (rec[0], rec[1]))
    return SweepResult(
        grid=grid, durations=durations, directions=directions, failures=failures
    )


def duration_map_grid(
    base_model: ModelSpec,
    cfg: IntegratorConfig,
    n_points: int = 64,
    gamma_min: float = 0.05,
    gamma_max: float = 2.0,
    eps: float = DEFAULT_EPS,
    min_len: float = DEFAULT_MIN_LEN,
) -> SweepGrid:
    """Log-spaced (gamma1, gamma2) grid for the duration/direction map."""
    values = np.geomspace(gamma_min, gamma_max, n_points)
    return SweepGrid(
        axis1_name=AXIS_GAMMA1,
        axis1_values=values,
        axis2_name=AXIS_GAMMA2,
        axis2_values=values.copy(),
        base_model=base_model,
        cfg=cfg,
        eps=eps,
        min_len=min_len,
    )


def diode_map_grid(
    base_model: ModelSpec,
    cfg: IntegratorConfig,
    n_points: int = 48,
    gamma2_min: float = 0.05,
    gamma2_max: float = 1.0,
    diff_min: float = 0.5,
    diff_max: float = 8.0,
    eps: float = DEFAULT_EPS,
    min_len: float = DEFAULT_MIN_LEN,
) -> SweepGrid:
    """(gamma2, gamma1-gamma2) grid for the diode-time map; gamma1 > gamma2."""
    return SweepGrid(
        axis1_name=AXIS_GAMMA2,
        axis1_values=np.linspace(gamma2_min, gamma2_max, n_points),
        axis2_name=AXIS_GAMMA_DIFF,
        axis2_values=np.linspace(diff_min, diff_max, n_points),
        base_model=base_model,
        cfg=cfg,
        eps=eps,
        min_len=min_len,
    )
