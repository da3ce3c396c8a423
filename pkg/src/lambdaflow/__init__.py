"""Transient energy flow through a dissipative three-level lambda system.

A degenerate three-level system (one excited level, two lower levels)
relaxes into two independent zero-temperature baths with exponential
memory kernels. The package computes the exact time-local coefficients
driving the reduced dynamics, the resulting populations and energy
currents, detects windows of unidirectional energy flow, sweeps
parameter maps in parallel, and cross-validates everything with a
stochastic-trajectory Monte Carlo oracle.
"""

from .coefficients import (
    CoefficientTrajectory,
    IntegratorConfig,
    evolve_coefficients,
    quadrature_oracle,
)
from .dynamics import (
    DynamicsTrajectory,
    flux_residual,
    master_equation_residual,
    populations,
)
from .errors import (
    BadGridError,
    ConfigParseError,
    GridMismatchError,
    GridTooLargeError,
    LambdaflowError,
    NonFiniteError,
    StepFailureError,
    ValidationError,
)
from .flow import (
    DEFAULT_EPS,
    DEFAULT_MIN_LEN,
    DiodeReport,
    FlowRegime,
    Interval,
    IntervalReport,
    classify,
    classify_grid,
    detect_intervals,
    diode_compare,
    duration_map_point,
)
from .model import BathSpec, ModelSpec, correlation, swap_baths
from .stochastic import (
    EnsembleEstimate,
    NoisePath,
    ensemble_average,
    make_noise_path,
    propagate_trajectory,
    sample_noise,
)
from .sweep import (
    SweepGrid,
    SweepResult,
    diode_map_grid,
    duration_map_grid,
    run_sweep,
)

__version__ = "0.1.0"
