"""Time-dependent memory coefficients of the exact reduced dynamics.

The two complex coefficients F1(t), F2(t) carry the entire influence of
the baths on the system. For the exponential kernel they obey a closed
pair of Riccati-type equations, obtained by differentiating the memory
integral F_j(t) = int_0^t alpha_j(t,s) f(t,s) ds under the kernel:

    dF_j/dt = coupling_j*gamma_j/2 + (i*omega - gamma_j + F1 + F2) * F_j,
    F_j(0) = 0.

That closed form is the production path (O(N)). An independent oracle
(`quadrature_oracle`) marches the two-time field f(t,s) directly on a
triangular grid and quadrates the memory integral at every step
(O(N^2)); it is the ground truth the closed path is validated against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _dopri
from .errors import (
    GridTooLargeError,
    NonFiniteError,
    StepFailureError,
    ValidationError,
)
from .model import ModelSpec

_ORACLE_STEP_BUDGET = 1_000_000


@dataclass(frozen=True)
class IntegratorConfig:
    """Adaptive-integration and output-grid settings.

    rho33_floor stops a run early once the excited-state population
    would fall below the floor (0 disables). Times are in units of
    1/omega.
    """

    t_max: float = 60.0
    dt_out: float = 1e-2
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    rho33_floor: float = 1e-4

    def __post_init__(self) -> None:
        if not self.t_max > 0:
            raise ValidationError(f"t_max must be positive, got {self.t_max}")
        if not self.dt_out > 0:
            raise ValidationError(f"dt_out must be positive, got {self.dt_out}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValidationError("tolerances must be positive")
        if self.rho33_floor < 0:
            raise ValidationError("rho33_floor must be >= 0")


@dataclass
class CoefficientTrajectory:
    """Memory coefficients on a uniform time grid.

    F1/F2 are the instantaneous complex coefficients, Fbar1/Fbar2 their
    running time integrals. When produced by `evolve_coefficients` the
    trajectory also carries `survival` (excited population divided by
    its initial value) and `transfer1/transfer2` (population moved into
    each lower level per unit initial excited population), accumulated
    inside the integrator so downstream population sums stay exact.
    """

    times: np.ndarray
    F1: np.ndarray
    F2: np.ndarray
    Fbar1: np.ndarray
    Fbar2: np.ndarray
    survival: Optional[np.ndarray] = None
    transfer1: Optional[np.ndarray] = None
    transfer2: Optional[np.ndarray] = None
    t_stop: float = 0.0
    stopped_early: bool = False

    def __len__(self) -> int:
        return len(self.times)


def evolve_coefficients(
    model: ModelSpec, cfg: IntegratorConfig
) -> CoefficientTrajectory:
    """Solve the closed coefficient system on cfg's uniform output grid.

    Raises NonFiniteError if the state blows up (a bug indicator, not a
    physical outcome) and StepFailureError if the stepper stalls.
    """
    n_out = int(np.floor(cfg.t_max / cfg.dt_out + 1e-9)) + 1
    y = np.empty((n_out, 7), np.complex128)

    rho33_0 = model.initial_populations[2]
    stop_level = 0.0
    if cfg.rho33_floor > 0 and rho33_0 > cfg.rho33_floor:
        # halt when rho33 = rho33_0 * survival crosses the floor
        stop_level = cfg.rho33_floor / rho33_0

    status, n_filled, t_stop = _dopri.drive_coefficients(
        model.omega,
        model.bath_left.gamma,
        model.bath_right.gamma,
        model.bath_left.coupling,
        model.bath_right.coupling,
        cfg.dt_out,
        n_out,
        cfg.rel_tol,
        cfg.abs_tol,
        stop_level,
        y,
    )
    if status == _dopri.STATUS_NONFINITE:
        raise NonFiniteError(
            f"coefficient state left the finite range near t={t_stop:.6g}"
        )
    if status == _dopri.STATUS_STEPFAIL:
        raise StepFailureError(
            f"adaptive step underflow near t={t_stop:.6g}; tolerances unreachable"
        )

    y = y[:n_filled]
    times = cfg.dt_out * np.arange(n_filled)
    stopped = n_filled < n_out
    return CoefficientTrajectory(
        times=times,
        F1=y[:, 0].copy(),
        F2=y[:, 1].copy(),
        Fbar1=y[:, 2].copy(),
        Fbar2=y[:, 3].copy(),
        survival=y[:, 4].real.copy(),
        transfer1=y[:, 5].real.copy(),
        transfer2=y[:, 6].real.copy(),
        t_stop=t_stop,
        stopped_early=stopped,
    )


def quadrature_oracle(
    model: ModelSpec, t_max: float, dt: float
) -> CoefficientTrajectory:
    """Ground-truth coefficients by direct two-time-field integration.

    O(N^2) in the step count; refuses grids beyond the step budget.
    The running integrals are recovered by cumulative trapezoid on the
    fine grid (adequate for the oracle's validation role).
    """
    if t_max < 0:
        raise ValidationError("t_max must be >= 0")
    if dt <= 0:
        raise ValidationError("dt must be positive")
    n = int(round(t_max / dt))
    if n > _ORACLE_STEP_BUDGET:
        raise GridTooLargeError(
            f"{n} steps exceed the oracle budget of {_ORACLE_STEP_BUDGET}"
        )

    F1 = np.zeros(n + 1, np.complex128)
    F2 = np.zeros(n + 1, np.complex128)
    _dopri.drive_two_time_field(
        model.omega,
        model.bath_left.gamma,
        model.bath_right.gamma,
        model.bath_left.coupling,
        model.bath_right.coupling,
        dt,
        n,
        F1,
        F2,
    )
    times = dt * np.arange(n + 1)
    Fbar1 = _cumtrapz(F1, dt)
    Fbar2 = _cumtrapz(F2, dt)
    return CoefficientTrajectory(
        times=times, F1=F1, F2=F2, Fbar1=Fbar1, Fbar2=Fbar2, t_stop=float(t_max)
    )


def _cumtrapz(values: np.ndarray, dt: float) -> np.ndarray:
    out = np.zeros_like(values)
    if len(values) > 1:
        out[1:] = np.cumsum(0.5 * dt * (values[1:] + values[:-1]))
    return out
