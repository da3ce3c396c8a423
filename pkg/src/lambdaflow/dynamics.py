"""Populations and energy currents derived from the memory coefficients.

The excited population follows the closed exponential form
rho33(t) = exp(-2 Re Fbar1 - 2 Re Fbar2) * rho33(0); the lower levels
fill according to rho_jj(t) = rho_jj(0) + int_0^t 2 Re F_j(s) rho33(s) ds,
and the instantaneous energy current into bath j is
J_j(t) = 2 * omega * Re F_j(t) * rho33(t), positive when flowing from
the system into the bath.

For diagonal initial states the exact master equation couples no
coherences into the populations, so only the diagonal is represented.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .coefficients import CoefficientTrajectory
from .errors import GridMismatchError
from .model import ModelSpec


@dataclass
class DynamicsTrajectory:
    """Level populations and bath currents on the coefficient grid."""

    times: np.ndarray
    rho11: np.ndarray
    rho22: np.ndarray
    rho33: np.ndarray
    J1: np.ndarray
    J2: np.ndarray


def _require_same_grid(a: np.ndarray, b: np.ndarray) -> None:
    if len(a) != len(b) or not np.array_equal(a, b):
        raise GridMismatchError("time grids differ")


def populations(coeffs: CoefficientTrajectory, model: ModelSpec) -> DynamicsTrajectory:
    """Build populations and currents for this model's initial state.

    Trajectories produced by `evolve_coefficients` carry integrator-
    accumulated survival/transfer components, which keep the population
    sum exact. Externally built trajectories fall back to cumulative
    trapezoid quadrature of 2 Re F_j * rho33 on the output grid.
    """
    p1_0, p2_0, p3_0 = model.initial_populations

    if coeffs.survival is not None:
        rho33 = p3_0 * coeffs.survival
        rho11 = p1_0 + p3_0 * coeffs.transfer1
        rho22 = p2_0 + p3_0 * coeffs.transfer2
    else:
        rho33 = p3_0 * np.exp(-2.0 * (coeffs.Fbar1.real + coeffs.Fbar2.real))
        rho11 = p1_0 + cumulative_trapezoid(
            2.0 * coeffs.F1.real * rho33, coeffs.times, initial=0.0
        )
        rho22 = p2_0 + cumulative_trapezoid(
            2.0 * coeffs.F2.real * rho33, coeffs.times, initial=0.0
        )

    J1 = 2.0 * model.omega * coeffs.F1.real * rho33
    J2 = 2.0 * model.omega * coeffs.F2.real * rho33
    return DynamicsTrajectory(
        times=coeffs.times, rho11=rho11, rho22=rho22, rho33=rho33, J1=J1, J2=J2
    )


def _central_difference(values: np.ndarray, dt: float, order: int) -> np.ndarray:
    """Interior centered derivative estimate of the stated order (2 or 4)."""
    if order == 2:
        return (values[2:] - values[:-2]) / (2.0 * dt)
    if order == 4:
        return (
            -values[4:] + 8.0 * values[3:-1] - 8.0 * values[1:-3] + values[:-4]
        ) / (12.0 * dt)
    raise ValueError(f"unsupported finite-difference order {order}")


def master_equation_residual(
    dyn: DynamicsTrajectory, coeffs: CoefficientTrajectory, fd_order: int = 2
) -> float:
    """Max defect of the diagonal master equation over interior grid points.

    Compares centered finite differences of each population against the
    analytic right-hand sides d rho33/dt = -2(Re F1 + Re F2) rho33 and
    d rho_jj/dt = 2 Re F_j rho33. The residual is dominated by the
    finite-difference truncation error of the chosen stencil.
    """
    _require_same_grid(dyn.times, coeffs.times)
    if len(dyn.times) < fd_order + 1:
        return 0.0
    dt = dyn.times[1] - dyn.times[0]
    lo = fd_order // 2
    hi = -lo
    reF1 = coeffs.F1.real[lo:hi]
    reF2 = coeffs.F2.real[lo:hi]
    rho33 = dyn.rho33[lo:hi]
    res = 0.0
    for values, rhs in (
        (dyn.rho33, -2.0 * (reF1 + reF2) * rho33),
        (dyn.rho11, 2.0 * reF1 * rho33),
        (dyn.rho22, 2.0 * reF2 * rho33),
    ):
        deriv = _central_difference(values, dt, fd_order)
        res = max(res, float(np.abs(deriv - rhs).max()))
    return res


def flux_residual(
    dyn: DynamicsTrajectory, omega: float = 1.0, fd_order: int = 4
) -> float:
    """Max defect of d rho33/dt + (J1 + J2)/omega over interior points.

    Energy lost by the system must equal the sum of the two bath
    currents; the identity holds exactly in the continuum, so what is
    measured here is the self-consistency of the sampled trajectory at
    finite grid spacing (finite-difference truncation).
    """
    if len(dyn.times) < fd_order + 1:
        return 0.0
    dt = dyn.times[1] - dyn.times[0]
    lo = fd_order // 2
    deriv = _central_difference(dyn.rho33, dt, fd_order)
    flux = (dyn.J1 + dyn.J2)[lo:-lo]
    return float(np.abs(deriv + flux / omega).max())
