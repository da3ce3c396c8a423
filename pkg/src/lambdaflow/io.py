"""Run configuration, delimited/JSON serialization, and sidecar metadata.

All float columns are printed with 17 significant digits (lossless for
doubles), newlines are LF, and a header row is always present, so
emit -> read -> emit is a byte-level fixed point. JSON documents mirror
the CSV column names exactly.

The configuration document is an INI-style key/section format; the
recognised sections and keys are listed in _SCHEMA below and documented
in the README. Unknown keys are rejected so that typos in physics
parameters cannot pass silently.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .coefficients import CoefficientTrajectory, IntegratorConfig
from .dynamics import DynamicsTrajectory
from .errors import ConfigParseError, ValidationError
from .flow import (
    DEFAULT_EPS,
    DEFAULT_MIN_LEN,
    DiodeReport,
    IntervalReport,
    classify_grid,
)
from .model import BathSpec, ModelSpec
from .stochastic import EnsembleEstimate
from .sweep import SweepResult

MODES = ("simulate", "sweep", "diode", "stochastic", "validate")
FORMATS = ("csv", "json")

SIMULATE_COLUMNS = (
    "t",
    "reF1",
    "imF1",
    "reF2",
    "imF2",
    "rho11",
    "rho22",
    "rho33",
    "J1",
    "J2",
    "regime",
)
SWEEP_COLUMNS = ("gamma1", "gamma2", "duration", "direction")
INTERVAL_COLUMNS = ("t_start", "t_end", "direction", "peak_magnitude")
STOCHASTIC_COLUMNS = (
    "t",
    "rho11",
    "rho22",
    "rho33",
    "re_rho12",
    "im_rho12",
    "re_rho13",
    "im_rho13",
    "re_rho23",
    "im_rho23",
    "stderr_rho11",
    "stderr_rho22",
    "stderr_rho33",
    "stderr_rho12",
    "stderr_rho13",
    "stderr_rho23",
    "trace",
    "trace_stderr",
)


def format_float(x: float) -> str:
    """Lossless decimal rendering of a double."""
    return "%.17g" % x


# ---------------------------------------------------------------------------
# run configuration


@dataclass(frozen=True)
class SweepAxisSpec:
    name: str
    start: float
    stop: float
    points: int
    scale: str = "linear"  # linear | log

    def __post_init__(self) -> None:
        if self.scale not in ("linear", "log"):
            raise ValidationError(f"axis scale must be linear or log, got {self.scale}")
        if self.points < 2:
            raise ValidationError("axis needs at least 2 points")
        if not self.stop > self.start:
            raise ValidationError("axis stop must exceed start")
        if self.scale == "log" and self.start <= 0:
            raise ValidationError("log axis requires positive start")

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class StochasticParams:
    n_traj: int = 10_000
    seed: int = 12345

    def __post_init__(self) -> None:
        if self.n_traj < 2:
            raise ValidationError("n_traj must be at least 2")


@dataclass
class RunConfig:
    """Fully resolved settings for one CLI run."""

    mode: str
    model: ModelSpec
    integrator: IntegratorConfig
    eps: float = DEFAULT_EPS
    min_len: float = DEFAULT_MIN_LEN
    fmt: str = "csv"
    output: Optional[Path] = None
    workers: int = 1
    sweep_axes: Optional[tuple[SweepAxisSpec, SweepAxisSpec]] = None
    stochastic: Optional[StochasticParams] = None

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValidationError(f"unknown mode {self.mode!r}")
        if self.fmt not in FORMATS:
            raise ValidationError(f"unknown format {self.fmt!r}")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")
        if self.eps < 0 or self.min_len < 0:
            raise ValidationError("eps and min_len must be >= 0")
        if self.mode == "sweep" and self.sweep_axes is None:
            raise ValidationError("sweep mode needs a [sweep] section")
        if self.mode == "stochastic" and self.stochastic is None:
            raise ValidationError("stochastic mode needs a [stochastic] section")


_SCHEMA = {
    "run": {"mode", "format", "output", "workers"},
    "model": {
        "gamma1",
        "gamma2",
        "coupling1",
        "coupling2",
        "omega",
        "rho11",
        "rho22",
        "rho33",
    },
    "integrator": {"t_max", "dt_out", "rel_tol", "abs_tol", "rho33_floor"},
    "flow": {"eps", "min_len"},
    "sweep": {
        "axis1",
        "axis1_start",
        "axis1_stop",
        "axis1_points",
        "axis1_scale",
        "axis2",
        "axis2_start",
        "axis2_stop",
        "axis2_points",
        "axis2_scale",
    },
    "stochastic": {"n_traj", "seed"},
}


def _get_float(section, key, default=None):
    raw = section.get(key)
    if raw is None:
        if default is None:
            raise ConfigParseError(f"missing key {key!r} in [{section.name}]")
        return default
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigParseError(f"[{section.name}] {key} = {raw!r}: not a number") from exc


def _get_int(section, key, default=None):
    raw = section.get(key)
    if raw is None:
        if default is None:
            raise ConfigParseError(f"missing key {key!r} in [{section.name}]")
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigParseError(f"[{section.name}] {key} = {raw!r}: not an integer") from exc


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a configuration document.

    Raises ConfigParseError for malformed documents or unknown keys and
    ValidationError when a physical invariant is violated.
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigParseError(str(exc)) from exc

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigParseError(f"unknown section [{section}]")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigParseError(f"unknown key {key!r} in [{section}]")

    run = parser["run"] if parser.has_section("run") else parser["DEFAULT"]
    mode = run.get("mode", "simulate")
    fmt = run.get("format", "csv")
    output = run.get("output")
    workers = _get_int(run, "workers", 1) if parser.has_section("run") else 1

    msec = parser["model"] if parser.has_section("model") else None
    if msec is None:
        raise ConfigParseError("missing [model] section")
    model = ModelSpec(
        bath_left=BathSpec(
            gamma=_get_float(msec, "gamma1"), coupling=_get_float(msec, "coupling1")
        ),
        bath_right=BathSpec(
            gamma=_get_float(msec, "gamma2"), coupling=_get_float(msec, "coupling2")
        ),
        omega=_get_float(msec, "omega", 1.0),
        initial_populations=(
            _get_float(msec, "rho11", 0.0),
            _get_float(msec, "rho22", 0.0),
            _get_float(msec, "rho33", 1.0),
        ),
    )

    if parser.has_section("integrator"):
        isec = parser["integrator"]
        integrator = IntegratorConfig(
            t_max=_get_float(isec, "t_max", 60.0),
            dt_out=_get_float(isec, "dt_out", 1e-2),
            rel_tol=_get_float(isec, "rel_tol", 1e-9),
            abs_tol=_get_float(isec, "abs_tol", 1e-12),
            rho33_floor=_get_float(isec, "rho33_floor", 1e-4),
        )
    else:
        integrator = IntegratorConfig()

    eps, min_len = DEFAULT_EPS, DEFAULT_MIN_LEN
    if parser.has_section("flow"):
        fsec = parser["flow"]
        eps = _get_float(fsec, "eps", DEFAULT_EPS)
        min_len = _get_float(fsec, "min_len", DEFAULT_MIN_LEN)

    sweep_axes = None
    if parser.has_section("sweep"):
        ssec = parser["sweep"]
        sweep_axes = (
            SweepAxisSpec(
                name=ssec.get("axis1", "gamma1"),
                start=_get_float(ssec, "axis1_start"),
                stop=_get_float(ssec, "axis1_stop"),
                points=_get_int(ssec, "axis1_points"),
                scale=ssec.get("axis1_scale", "linear"),
            ),
            SweepAxisSpec(
                name=ssec.get("axis2", "gamma2"),
                start=_get_float(ssec, "axis2_start"),
                stop=_get_float(ssec, "axis2_stop"),
                points=_get_int(ssec, "axis2_points"),
                scale=ssec.get("axis2_scale", "linear"),
            ),
        )

    stochastic = None
    if parser.has_section("stochastic"):
        tsec = parser["stochastic"]
        stochastic = StochasticParams(
            n_traj=_get_int(tsec, "n_traj", 10_000), seed=_get_int(tsec, "seed", 12345)
        )

    return RunConfig(
        mode=mode,
        model=model,
        integrator=integrator,
        eps=eps,
        min_len=min_len,
        fmt=fmt,
        output=Path(output) if output else None,
        workers=workers,
        sweep_axes=sweep_axes,
        stochastic=stochastic,
    )


def serialize_config(cfg: RunConfig) -> str:
    """Render a RunConfig back to the INI document format."""
    lines = ["[run]", f"mode = {cfg.mode}", f"format = {cfg.fmt}"]
    if cfg.output is not None:
        lines.append(f"output = {cfg.output}")
    lines.append(f"workers = {cfg.workers}")
    lines += [
        "",
        "[model]",
        f"gamma1 = {format_float(cfg.model.bath_left.gamma)}",
        f"gamma2 = {format_float(cfg.model.bath_right.gamma)}",
        f"coupling1 = {format_float(cfg.model.bath_left.coupling)}",
        f"coupling2 = {format_float(cfg.model.bath_right.coupling)}",
        f"omega = {format_float(cfg.model.omega)}",
        f"rho11 = {format_float(cfg.model.initial_populations[0])}",
        f"rho22 = {format_float(cfg.model.initial_populations[1])}",
        f"rho33 = {format_float(cfg.model.initial_populations[2])}",
        "",
        "[integrator]",
        f"t_max = {format_float(cfg.integrator.t_max)}",
        f"dt_out = {format_float(cfg.integrator.dt_out)}",
        f"rel_tol = {format_float(cfg.integrator.rel_tol)}",
        f"abs_tol = {format_float(cfg.integrator.abs_tol)}",
        f"rho33_floor = {format_float(cfg.integrator.rho33_floor)}",
        "",
        "[flow]",
        f"eps = {format_float(cfg.eps)}",
        f"min_len = {format_float(cfg.min_len)}",
    ]
    if cfg.sweep_axes is not None:
        a1, a2 = cfg.sweep_axes
        lines += ["", "[sweep]"]
        for tag, ax in (("axis1", a1), ("axis2", a2)):
            lines += [
                f"{tag} = {ax.name}",
                f"{tag}_start = {format_float(ax.start)}",
                f"{tag}_stop = {format_float(ax.stop)}",
                f"{tag}_points = {ax.points}",
                f"{tag}_scale = {ax.scale}",
            ]
    if cfg.stochastic is not None:
        lines += [
            "",
            "[stochastic]",
            f"n_traj = {cfg.stochastic.n_traj}",
            f"seed = {cfg.stochastic.seed}",
        ]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# result tables


@dataclass
class SimulateTable:
    """Column-oriented simulate output matching SIMULATE_COLUMNS."""

    t: np.ndarray
    reF1: np.ndarray
    imF1: np.ndarray
    reF2: np.ndarray
    imF2: np.ndarray
    rho11: np.ndarray
    rho22: np.ndarray
    rho33: np.ndarray
    J1: np.ndarray
    J2: np.ndarray
    regime: np.ndarray  # '<U1' codes


def build_simulate_table(
    coeffs: CoefficientTrajectory,
    dyn: DynamicsTrajectory,
    eps: float = DEFAULT_EPS,
) -> SimulateTable:
    regimes = classify_grid(coeffs.F1.real, coeffs.F2.real, eps)
    return SimulateTable(
        t=coeffs.times,
        reF1=coeffs.F1.real,
        imF1=coeffs.F1.imag,
        reF2=coeffs.F2.real,
        imF2=coeffs.F2.imag,
        rho11=dyn.rho11,
        rho22=dyn.rho22,
        rho33=dyn.rho33,
        J1=dyn.J1,
        J2=dyn.J2,
        regime=regimes,
    )


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)


def _csv_lines(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"


def emit(result, fmt: str, path: Path | str) -> Path:
    """Serialize a result object to CSV or JSON at the given path."""
    path = Path(path)
    if fmt not in FORMATS:
        raise ValidationError(f"unknown format {fmt!r}")
    writers = {
        SimulateTable: (_simulate_csv, _simulate_json),
        SweepResult: (_sweep_csv, _sweep_json),
        IntervalReport: (_intervals_csv, _intervals_json),
        EnsembleEstimate: (_stochastic_csv, _stochastic_json),
        DiodeReport: (_diode_json, _diode_json),
    }
    for klass, (csv_fn, json_fn) in writers.items():
        if isinstance(result, klass):
            text = csv_fn(result) if fmt == "csv" else json_fn(result)
            _write_text(path, text)
            return path
    raise ValidationError(f"cannot serialize {type(result).__name__}")


def _simulate_rows(table: SimulateTable):
    cols = [getattr(table, name) for name in SIMULATE_COLUMNS[:-1]]
    for i in range(len(table.t)):
        yield [format_float(float(col[i])) for col in cols] + [str(table.regime[i])]


def _simulate_csv(table: SimulateTable) -> str:
    return _csv_lines(SIMULATE_COLUMNS, _simulate_rows(table))


def _simulate_json(table: SimulateTable) -> str:
    doc = {name: [float(v) for v in getattr(table, name)] for name in SIMULATE_COLUMNS[:-1]}
    doc["regime"] = [str(c) for c in table.regime]
    return json.dumps(doc, indent=1) + "\n"


def _sweep_rows(result: SweepResult):
    grid = result.grid
    for i in range(len(grid.axis1_values)):
        for j in range(len(grid.axis2_values)):
            model = grid.model_at(i, j)
            yield [
                format_float(model.bath_left.gamma),
                format_float(model.bath_right.gamma),
                format_float(float(result.durations[i, j])),
                str(int(result.directions[i, j])),
            ]


def _sweep_csv(result: SweepResult) -> str:
    return _csv_lines(SWEEP_COLUMNS, _sweep_rows(result))


def _sweep_json(result: SweepResult) -> str:
    gamma1, gamma2, duration, direction = [], [], [], []
    for row in _sweep_rows(result):
        gamma1.append(float(row[0]))
        gamma2.append(float(row[1]))
        duration.append(float(row[2]))
        direction.append(int(row[3]))
    doc = {
        "gamma1": gamma1,
        "gamma2": gamma2,
        "duration": duration,
        "direction": direction,
        "failures": [
            {"i": i, "j": j, "error": msg} for (i, j, msg) in result.failures
        ],
    }
    return json.dumps(doc, indent=1) + "\n"


def _intervals_rows(report: IntervalReport):
    for iv in report.intervals:
        yield [
            format_float(iv.t_start),
            format_float(iv.t_end),
            str(iv.direction),
            format_float(iv.peak_magnitude),
        ]


def _intervals_csv(report: IntervalReport) -> str:
    return _csv_lines(INTERVAL_COLUMNS, _intervals_rows(report))


def _intervals_json(report: IntervalReport) -> str:
    doc = {
        "t_start": [iv.t_start for iv in report.intervals],
        "t_end": [iv.t_end for iv in report.intervals],
        "direction": [iv.direction for iv in report.intervals],
        "peak_magnitude": [iv.peak_magnitude for iv in report.intervals],
        "first_duration": report.first_duration,
    }
    return json.dumps(doc, indent=1) + "\n"


def _stochastic_columns(est: EnsembleEstimate):
    rh, se = est.rho_hat, est.stderr
    return {
        "t": est.times,
        "rho11": rh[:, 0, 0].real,
        "rho22": rh[:, 1, 1].real,
        "rho33": rh[:, 2, 2].real,
        "re_rho12": rh[:, 0, 1].real,
        "im_rho12": rh[:, 0, 1].imag,
        "re_rho13": rh[:, 0, 2].real,
        "im_rho13": rh[:, 0, 2].imag,
        "re_rho23": rh[:, 1, 2].real,
        "im_rho23": rh[:, 1, 2].imag,
        "stderr_rho11": se[:, 0, 0],
        "stderr_rho22": se[:, 1, 1],
        "stderr_rho33": se[:, 2, 2],
        "stderr_rho12": se[:, 0, 1],
        "stderr_rho13": se[:, 0, 2],
        "stderr_rho23": se[:, 1, 2],
        "trace": est.trace_mean,
        "trace_stderr": est.trace_stderr,
    }


def _stochastic_csv(est: EnsembleEstimate) -> str:
    cols = _stochastic_columns(est)
    rows = (
        [format_float(float(cols[name][i])) for name in STOCHASTIC_COLUMNS]
        for i in range(len(est.times))
    )
    return _csv_lines(STOCHASTIC_COLUMNS, rows)


def _stochastic_json(est: EnsembleEstimate) -> str:
    cols = _stochastic_columns(est)
    doc = {name: [float(v) for v in cols[name]] for name in STOCHASTIC_COLUMNS}
    doc["n_traj"] = est.n_traj
    doc["seed"] = est.seed
    return json.dumps(doc, indent=1) + "\n"


def _diode_side(side) -> dict:
    return {
        "gamma1": side.model.bath_left.gamma,
        "gamma2": side.model.bath_right.gamma,
        "coupling1": side.model.bath_left.coupling,
        "coupling2": side.model.bath_right.coupling,
        "intervals": [
            {
                "t_start": iv.t_start,
                "t_end": iv.t_end,
                "direction": iv.direction,
                "peak_magnitude": iv.peak_magnitude,
            }
            for iv in side.intervals.intervals
        ],
        "first_duration": side.intervals.first_duration,
        "peak_rate": side.peak_rate,
        "peak_bottleneck_current": side.peak_bottleneck_current,
    }


def _diode_json(report: DiodeReport) -> str:
    doc = {
        "forward": _diode_side(report.forward),
        "reverse": _diode_side(report.reverse),
        "asymmetry_ratio": report.asymmetry_ratio,
    }
    return json.dumps(doc, indent=1) + "\n"


# ---------------------------------------------------------------------------
# readers


def _read_csv_columns(path: Path | str, expected: tuple[str, ...]) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValidationError(f"{path}: empty file")
    header = tuple(lines[0].split(","))
    if header != expected:
        raise ValidationError(f"{path}: unexpected columns {header}")
    raw = [line.split(",") for line in lines[1:] if line]
    return {"header": header, "rows": raw}


def read_simulate(path: Path | str) -> dict:
    """Read a simulate table; float columns as arrays, regime as codes."""
    table = _read_csv_columns(path, SIMULATE_COLUMNS)
    rows = table["rows"]
    out = {}
    for k, name in enumerate(SIMULATE_COLUMNS[:-1]):
        out[name] = np.array([float(row[k]) for row in rows])
    out["regime"] = np.array([row[-1] for row in rows], dtype="U1")
    return out


def read_sweep(path: Path | str) -> dict:
    table = _read_csv_columns(path, SWEEP_COLUMNS)
    rows = table["rows"]
    return {
        "gamma1": np.array([float(r[0]) for r in rows]),
        "gamma2": np.array([float(r[1]) for r in rows]),
        "duration": np.array([float(r[2]) for r in rows]),
        "direction": np.array([int(r[3]) for r in rows]),
    }


def read_intervals(path: Path | str) -> dict:
    table = _read_csv_columns(path, INTERVAL_COLUMNS)
    rows = table["rows"]
    return {
        "t_start": np.array([float(r[0]) for r in rows]),
        "t_end": np.array([float(r[1]) for r in rows]),
        "direction": np.array([int(r[2]) for r in rows]),
        "peak_magnitude": np.array([float(r[3]) for r in rows]),
    }


# ---------------------------------------------------------------------------
# sidecar metadata


def write_sidecar(output_path: Path | str, cfg: RunConfig) -> Path:
    """Write the resolved-config metadata record next to an output file."""
    path = Path(str(output_path) + ".meta.json")
    doc = {
        "artifact": "lambdaflow",
        "version": __version__,
        "mode": cfg.mode,
        "config": serialize_config(cfg),
    }
    _write_text(path, json.dumps(doc, indent=1) + "\n")
    return path
