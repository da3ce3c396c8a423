"""Trajectory-level validation of the deterministic solution.

The linear stochastic wavefunction equation drives the three amplitudes
(c1, c2, c3) with one colored complex Gaussian process per bath:

    dc3/dt = (-i*omega - F1(t) - F2(t)) c3,
    dc_j/dt = z*_j(t) c3              (j = 1, 2),

where each z*_j is a stationary complex Ornstein-Uhlenbeck process
whose covariance matches the bath correlation function and whose
pseudo-covariance vanishes (circularly symmetric construction). The
ensemble mean of the outer products |psi><psi| converges to the reduced
density matrix, which is what the deterministic population formulas are
checked against.

Trajectory states are returned as arrays of shape (n_times, 3); row k
holds the amplitudes (c1, c2, c3) at times[k].
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from . import _dopri
from .coefficients import CoefficientTrajectory, IntegratorConfig, evolve_coefficients
from .errors import (
    BadGridError,
    GridMismatchError,
    NonFiniteError,
    StepFailureError,
    ValidationError,
)
from .model import BathSpec, ModelSpec

_TRAJ_RTOL = 1e-9
_TRAJ_ATOL = 1e-12
_BLOCK = 256


@dataclass
class NoisePath:
    """One realisation of the two bath noise processes on a shared grid."""

    times: np.ndarray
    z1: np.ndarray
    z2: np.ndarray


@dataclass
class EnsembleEstimate:
    """Monte Carlo density-matrix estimate with per-entry standard errors."""

    times: np.ndarray
    rho_hat: np.ndarray  # (n_times, 3, 3) complex
    stderr: np.ndarray  # (n_times, 3, 3) real
    trace_mean: np.ndarray
    trace_stderr: np.ndarray
    n_traj: int
    seed: int


def _grid_spacing(times: np.ndarray) -> float:
    if len(times) < 2:
        raise BadGridError("need at least two grid points")
    steps = np.diff(times)
    dt = steps[0]
    if dt <= 0 or not np.allclose(steps, dt, rtol=1e-9, atol=1e-12):
        raise BadGridError("noise sampling requires a uniform time grid")
    return float(dt)


def sample_noise(
    bath: BathSpec, times: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Stationary complex Ornstein-Uhlenbeck path on a uniform grid.

    The discrete recursion z[k+1] = r z[k] + sqrt(V(1-r^2)) xi[k] with
    r = exp(-gamma dt) and circular complex innovations xi reproduces
    the target covariance E[z_t z*_s] = V exp(-gamma|t-s|) exactly at
    the grid points, with V = coupling*gamma/2; the pseudo-covariance
    E[z_t z_s] is zero by construction. The first sample is drawn from
    the stationary distribution.
    """
    dt = _grid_spacing(times)
    n = len(times)
    variance = 0.5 * bath.coupling * bath.gamma
    if variance == 0.0:
        return np.zeros(n, np.complex128)
    r = np.exp(-bath.gamma * dt)
    raw = rng.standard_normal((n, 2))
    xi = (raw[:, 0] + 1j * raw[:, 1]) / np.sqrt(2.0)
    drive = np.empty(n, np.complex128)
    drive[0] = np.sqrt(variance) * xi[0]
    drive[1:] = np.sqrt(variance * (1.0 - r * r)) * xi[1:]
    return lfilter([1.0], [1.0, -r], drive)


def make_noise_path(
    model: ModelSpec, times: np.ndarray, rng: np.random.Generator
) -> NoisePath:
    """Draw both bath processes from one generator (left bath first)."""
    z1 = sample_noise(model.bath_left, times, rng)
    z2 = sample_noise(model.bath_right, times, rng)
    return NoisePath(times=times, z1=z1, z2=z2)


def _coefficient_derivatives(
    model: ModelSpec, coeffs: CoefficientTrajectory
) -> tuple[np.ndarray, np.ndarray]:
    """Exact knot derivatives of F1, F2 from their closed equations."""
    drift = 1j * model.omega + coeffs.F1 + coeffs.F2
    left, right = model.bath_left, model.bath_right
    dF1 = 0.5 * left.coupling * left.gamma + (drift - left.gamma) * coeffs.F1
    dF2 = 0.5 * right.coupling * right.gamma + (drift - right.gamma) * coeffs.F2
    return np.ascontiguousarray(dF1), np.ascontiguousarray(dF2)


def _require_excited_start(model: ModelSpec) -> None:
    if model.initial_populations != (0.0, 0.0, 1.0):
        raise ValidationError(
            "stochastic trajectories start from the pure excited state; "
            "initial populations must be (0, 0, 1)"
        )


def propagate_trajectory(
    model: ModelSpec, coeffs: CoefficientTrajectory, noise: NoisePath
) -> np.ndarray:
    """Integrate one stochastic wavefunction; returns (n_times, 3) amplitudes.

    The drift coefficients come from the deterministic coefficient
    trajectory; noise samples are interpolated linearly inside steps,
    and steps never cross noise-grid knots.
    """
    _require_excited_start(model)
    if len(coeffs.times) != len(noise.times) or not np.array_equal(
        coeffs.times, noise.times
    ):
        raise GridMismatchError("coefficient and noise grids differ")
    dt = _grid_spacing(noise.times)

    c = np.zeros((len(noise.times), 3), np.complex128)
    c[0, 2] = 1.0
    dF1, dF2 = _coefficient_derivatives(model, coeffs)
    status, n_done = _dopri.drive_trajectory(
        model.omega,
        np.ascontiguousarray(coeffs.F1),
        np.ascontiguousarray(coeffs.F2),
        dF1,
        dF2,
        np.ascontiguousarray(noise.z1),
        np.ascontiguousarray(noise.z2),
        dt,
        _TRAJ_RTOL,
        _TRAJ_ATOL,
        c,
    )
    if status == _dopri.STATUS_NONFINITE:
        raise NonFiniteError(f"trajectory state left the finite range at knot {n_done}")
    if status == _dopri.STATUS_STEPFAIL:
        raise StepFailureError(f"trajectory stepper stalled at knot {n_done}")
    return c


_UPPER = ((0, 1), (0, 2), (1, 2))


def _block_sums(
    model: ModelSpec,
    coeffs: CoefficientTrajectory,
    children: list[np.random.SeedSequence],
) -> tuple[np.ndarray, ...]:
    """Outer-product sums over one block of trajectories, in index order.

    Only the diagonal (real) and the upper triangle are accumulated;
    the estimate is mirrored afterwards, which keeps it Hermitian at
    the bit level regardless of how the hardware contracts complex
    products.
    """
    n = len(coeffs.times)
    diag1 = np.zeros((n, 3), np.float64)
    diag2 = np.zeros((n, 3), np.float64)
    off1 = np.zeros((n, 3), np.complex128)
    off2 = np.zeros((n, 3), np.float64)
    tr1 = np.zeros(n, np.float64)
    tr2 = np.zeros(n, np.float64)
    for child in children:
        rng = np.random.Generator(np.random.PCG64(child))
        noise = make_noise_path(model, coeffs.times, rng)
        c = propagate_trajectory(model, coeffs, noise)
        mags = c.real**2 + c.imag**2
        diag1 += mags
        diag2 += mags**2
        for k, (a, b) in enumerate(_UPPER):
            prod = c[:, a] * c[:, b].conj()
            off1[:, k] += prod
            off2[:, k] += prod.real**2 + prod.imag**2
        trace = mags.sum(axis=1)
        tr1 += trace
        tr2 += trace * trace
    return diag1, diag2, off1, off2, tr1, tr2


def ensemble_average(
    model: ModelSpec,
    cfg: IntegratorConfig,
    n_traj: int,
    seed: int,
    workers: int = 1,
) -> EnsembleEstimate:
    """Monte Carlo estimate of the density matrix from n_traj trajectories.

    Per-trajectory noise streams are derived deterministically from
    (seed, trajectory index), and block partial sums are reduced in a
    fixed order, so the estimate is bit-identical for any worker count.
    """
    if n_traj < 2:
        raise ValidationError("n_traj must be at least 2")
    _require_excited_start(model)

    coeffs = evolve_coefficients(model, cfg)
    children = np.random.SeedSequence(seed).spawn(n_traj)
    blocks = [children[lo : lo + _BLOCK] for lo in range(0, n_traj, _BLOCK)]

    if workers <= 1:
        partials = [_block_sums(model, coeffs, block) for block in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(
                pool.map(lambda block: _block_sums(model, coeffs, block), blocks)
            )

    n = len(coeffs.times)
    diag1 = np.zeros((n, 3), np.float64)
    diag2 = np.zeros((n, 3), np.float64)
    off1 = np.zeros((n, 3), np.complex128)
    off2 = np.zeros((n, 3), np.float64)
    tr1 = np.zeros(n, np.float64)
    tr2 = np.zeros(n, np.float64)
    for pd1, pd2, po1, po2, ptr1, ptr2 in partials:  # fixed block order
        diag1 += pd1
        diag2 += pd2
        off1 += po1
        off2 += po2
        tr1 += ptr1
        tr2 += ptr2

    def spread(sq_sum, mean_sq):
        var = (sq_sum - mean_sq * n_traj) / (n_traj - 1)
        return np.sqrt(np.maximum(var, 0.0) / n_traj)

    mean = np.zeros((n, 3, 3), np.complex128)
    stderr = np.zeros((n, 3, 3), np.float64)
    for a in range(3):
        mean[:, a, a] = diag1[:, a] / n_traj
        stderr[:, a, a] = spread(diag2[:, a], (diag1[:, a] / n_traj) ** 2)
    for k, (a, b) in enumerate(_UPPER):
        m = off1[:, k] / n_traj
        mean[:, a, b] = m
        mean[:, b, a] = m.conj()
        stderr[:, a, b] = spread(off2[:, k], m.real**2 + m.imag**2)
        stderr[:, b, a] = stderr[:, a, b]

    trace_mean = tr1 / n_traj
    trace_stderr = spread(tr2, trace_mean**2)

    return EnsembleEstimate(
        times=coeffs.times,
        rho_hat=mean,
        stderr=stderr,
        trace_mean=trace_mean,
        trace_stderr=trace_stderr,
        n_traj=n_traj,
        seed=seed,
    )
