"""Command-line interface.

Subcommands:
    simulate    one trajectory: coefficients, populations, currents,
                regime column; writes an interval sidecar alongside
    sweep       duration/direction map over a 2-D parameter grid
    diode       forward/reversed geometry comparison
    stochastic  Monte Carlo ensemble estimate of the density matrix
    validate    closed-form vs quadrature-oracle equivalence suite

Flag values override config-file values, which override built-in
defaults. Every run writes a `<output>.meta.json` sidecar holding the
fully resolved configuration.

Exit codes: 0 success, 1 validation/physics error, 2 I/O error,
3 integration failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io as lio
from .coefficients import IntegratorConfig, evolve_coefficients
from .dynamics import populations
from .errors import (
    ConfigParseError,
    GridTooLargeError,
    NonFiniteError,
    StepFailureError,
    ValidationError,
)
from .flow import DEFAULT_EPS, DEFAULT_MIN_LEN, detect_intervals, diode_compare
from .model import BathSpec, ModelSpec
from .stochastic import ensemble_average
from .sweep import SweepGrid, run_sweep
from .validation import run_validation

EXIT_OK = 0
EXIT_PHYSICS = 1
EXIT_IO = 2
EXIT_INTEGRATION = 3

_MODE_MODEL_DEFAULTS = {
    # gamma1, gamma2, coupling1, coupling2
    "simulate": (0.2, 10.0, 1.0, 1.0),
    "sweep": (1.0, 1.0, 1.0, 1.0),
    "sweep:diode-map": (1.0, 0.2, 0.5, 1.0),
    "diode": (5.0, 0.2, 0.5, 1.0),
    "stochastic": (1.0, 1.0, 1.0, 1.0),
}
_MODE_TMAX_DEFAULTS = {"simulate": 60.0, "sweep": 60.0, "diode": 60.0, "stochastic": 10.0}

_PREBUILT_AXES = {
    "duration-map": (
        lio.SweepAxisSpec("gamma1", 0.05, 2.0, 64, "log"),
        lio.SweepAxisSpec("gamma2", 0.05, 2.0, 64, "log"),
    ),
    "diode-map": (
        lio.SweepAxisSpec("gamma2", 0.05, 1.0, 48, "linear"),
        lio.SweepAxisSpec("gamma_diff", 0.5, 8.0, 48, "linear"),
    ),
}


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", type=Path, help="INI configuration file")
    sub.add_argument("--gamma1", type=float, help="left-bath memory parameter")
    sub.add_argument("--gamma2", type=float, help="right-bath memory parameter")
    sub.add_argument("--coupling1", type=float, help="left-bath coupling strength")
    sub.add_argument("--coupling2", type=float, help="right-bath coupling strength")
    sub.add_argument("--tmax", type=float, help="maximum simulated time (1/omega)")
    sub.add_argument("--dt-out", type=float, help="output grid spacing")
    sub.add_argument("--eps", type=float, help="flow-classifier dead band")
    sub.add_argument("--min-len", type=float, help="minimum interval length kept")
    sub.add_argument("--workers", type=int, help="worker threads for parallel parts")
    sub.add_argument("--out", type=Path, help="output file path")
    sub.add_argument("--format", choices=lio.FORMATS, help="output format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lambdaflow",
        description="Transient energy flow through a dissipative three-level system",
    )
    sub = parser.add_subparsers(dest="mode", required=True)

    for mode in ("simulate", "sweep", "diode", "stochastic"):
        p = sub.add_parser(mode)
        _add_common_flags(p)
        if mode == "sweep":
            p.add_argument(
                "--kind",
                choices=("duration-map", "diode-map"),
                default="duration-map",
                help="prebuilt grid when no [sweep] section is given",
            )
        if mode == "stochastic":
            p.add_argument("--n-traj", type=int, help="trajectory count")
            p.add_argument("--seed", type=int, help="ensemble RNG seed")

    sub.add_parser("validate", description="run the oracle-equivalence suite")
    return parser


def _resolve_config(args: argparse.Namespace) -> lio.RunConfig:
    """Merge built-in defaults, config file, and CLI flags (flags win)."""
    file_cfg = None
    if getattr(args, "config", None):
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise _IOFailure(f"cannot read config: {exc}") from exc
        file_cfg = lio.parse_config(text)

    mode = args.mode
    kind = getattr(args, "kind", None)
    defaults_key = mode
    if mode == "sweep" and kind == "diode-map" and f"{mode}:{kind}" in _MODE_MODEL_DEFAULTS:
        defaults_key = f"{mode}:{kind}"
    g1d, g2d, c1d, c2d = _MODE_MODEL_DEFAULTS[defaults_key]

    def pick(flag, file_value, default):
        if flag is not None:
            return flag
        if file_value is not None:
            return file_value
        return default

    fm = file_cfg.model if file_cfg else None
    model = ModelSpec(
        bath_left=BathSpec(
            gamma=pick(args.gamma1, fm.bath_left.gamma if fm else None, g1d),
            coupling=pick(args.coupling1, fm.bath_left.coupling if fm else None, c1d),
        ),
        bath_right=BathSpec(
            gamma=pick(args.gamma2, fm.bath_right.gamma if fm else None, g2d),
            coupling=pick(args.coupling2, fm.bath_right.coupling if fm else None, c2d),
        ),
        omega=fm.omega if fm else 1.0,
        initial_populations=fm.initial_populations if fm else (0.0, 0.0, 1.0),
    )

    fi = file_cfg.integrator if file_cfg else None
    integrator = IntegratorConfig(
        t_max=pick(args.tmax, fi.t_max if fi else None, _MODE_TMAX_DEFAULTS[mode]),
        dt_out=pick(args.dt_out, fi.dt_out if fi else None, 1e-2),
        rel_tol=fi.rel_tol if fi else 1e-9,
        abs_tol=fi.abs_tol if fi else 1e-12,
        rho33_floor=fi.rho33_floor if fi else 1e-4,
    )

    stochastic = None
    if mode == "stochastic":
        base = file_cfg.stochastic if file_cfg and file_cfg.stochastic else None
        stochastic = lio.StochasticParams(
            n_traj=pick(args.n_traj, base.n_traj if base else None, 10_000),
            seed=pick(args.seed, base.seed if base else None, 12345),
        )

    sweep_axes = file_cfg.sweep_axes if file_cfg else None
    if mode == "sweep" and sweep_axes is None:
        sweep_axes = _PREBUILT_AXES[kind or "duration-map"]

    return lio.RunConfig(
        mode=mode,
        model=model,
        integrator=integrator,
        eps=pick(args.eps, file_cfg.eps if file_cfg else None, DEFAULT_EPS),
        min_len=pick(args.min_len, file_cfg.min_len if file_cfg else None, DEFAULT_MIN_LEN),
        fmt=pick(args.format, file_cfg.fmt if file_cfg else None, "csv"),
        output=pick(args.out, file_cfg.output if file_cfg else None, None),
        workers=pick(args.workers, file_cfg.workers if file_cfg else None, 1),
        sweep_axes=sweep_axes,
        stochastic=stochastic,
    )


class _IOFailure(Exception):
    pass


def _default_out(cfg: lio.RunConfig, stem: str) -> Path:
    ext = "csv" if cfg.fmt == "csv" else "json"
    return Path(f"{stem}.{ext}")


def _cmd_simulate(cfg: lio.RunConfig) -> int:
    coeffs = evolve_coefficients(cfg.model, cfg.integrator)
    dyn = populations(coeffs, cfg.model)
    table = lio.build_simulate_table(coeffs, dyn, cfg.eps)
    report = detect_intervals(coeffs, eps=cfg.eps, min_len=cfg.min_len)

    out = cfg.output or _default_out(cfg, "simulate")
    lio.emit(table, cfg.fmt, out)
    intervals_path = out.with_name(out.stem + ".intervals." + ("csv" if cfg.fmt == "csv" else "json"))
    lio.emit(report, cfg.fmt, intervals_path)
    lio.write_sidecar(out, cfg)
    print(f"wrote {out} and {intervals_path}")
    print(
        f"n_points={len(coeffs)} t_stop={coeffs.t_stop:.6g} "
        f"intervals={len(report)} first_duration={report.first_duration:.6g}"
    )
    return EXIT_OK


def _cmd_sweep(cfg: lio.RunConfig) -> int:
    a1, a2 = cfg.sweep_axes
    grid = SweepGrid(
        axis1_name=a1.name,
        axis1_values=a1.values(),
        axis2_name=a2.name,
        axis2_values=a2.values(),
        base_model=cfg.model,
        cfg=cfg.integrator,
        eps=cfg.eps,
        min_len=cfg.min_len,
    )
    result = run_sweep(grid, workers=cfg.workers)
    out = cfg.output or _default_out(cfg, "sweep")
    lio.emit(result, cfg.fmt, out)
    lio.write_sidecar(out, cfg)
    nonzero = int((result.durations > 0).sum())
    print(f"wrote {out}")
    print(
        f"cells={result.durations.size} nonzero={nonzero} "
        f"failures={len(result.failures)}"
    )
    return EXIT_OK


def _cmd_diode(cfg: lio.RunConfig) -> int:
    report = diode_compare(cfg.model, cfg.integrator, eps=cfg.eps, min_len=cfg.min_len)
    out = cfg.output or Path("diode.json")
    lio.emit(report, "json", out)

    # companion trajectory tables for both geometries
    for side, tag in ((report.forward, "forward"), (report.reverse, "reverse")):
        coeffs = evolve_coefficients(side.model, cfg.integrator)
        dyn = populations(coeffs, side.model)
        table = lio.build_simulate_table(coeffs, dyn, cfg.eps)
        side_path = out.with_name(out.stem + f".{tag}.csv")
        lio.emit(table, "csv", side_path)
    lio.write_sidecar(out, cfg)
    print(f"wrote {out} (+ .forward.csv/.reverse.csv)")
    print(
        f"asymmetry_ratio={report.asymmetry_ratio:.6g} "
        f"forward_first_duration={report.forward.intervals.first_duration:.6g} "
        f"reverse_first_duration={report.reverse.intervals.first_duration:.6g}"
    )
    return EXIT_OK


def _cmd_stochastic(cfg: lio.RunConfig) -> int:
    est = ensemble_average(
        cfg.model,
        cfg.integrator,
        n_traj=cfg.stochastic.n_traj,
        seed=cfg.stochastic.seed,
        workers=cfg.workers,
    )
    out = cfg.output or _default_out(cfg, "stochastic")
    lio.emit(est, cfg.fmt, out)
    lio.write_sidecar(out, cfg)
    print(f"wrote {out}")
    print(f"n_traj={est.n_traj} seed={est.seed} n_points={len(est.times)}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.mode == "validate":
            return EXIT_OK if run_validation(verbose=True) else EXIT_PHYSICS
        cfg = _resolve_config(args)
        if args.mode == "simulate":
            return _cmd_simulate(cfg)
        if args.mode == "sweep":
            return _cmd_sweep(cfg)
        if args.mode == "diode":
            return _cmd_diode(cfg)
        if args.mode == "stochastic":
            return _cmd_stochastic(cfg)
        parser.error(f"unhandled mode {args.mode}")
    except (ConfigParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except (NonFiniteError, StepFailureError, GridTooLargeError) as exc:
        print(f"integration error: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except (_IOFailure, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
