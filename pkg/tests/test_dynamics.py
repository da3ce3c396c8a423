import numpy as np
import pytest
from scipy.integrate import simpson

from lambdaflow import (
    BathSpec,
    CoefficientTrajectory,
    GridMismatchError,
    IntegratorConfig,
    ModelSpec,
    evolve_coefficients,
    flux_residual,
    master_equation_residual,
    populations,
)


def make_model(g1, g2, c1=1.0, c2=1.0):
    return ModelSpec(bath_left=BathSpec(g1, c1), bath_right=BathSpec(g2, c2))


def run(model, **kw):
    cfg = IntegratorConfig(**{"t_max": 30.0, "rho33_floor": 0.0, **kw})
    co = evolve_coefficients(model, cfg)
    return co, populations(co, model)


def test_initial_point_matches_initial_state():
    co, dyn = run(make_model(0.5, 2.0))
    assert (dyn.rho11[0], dyn.rho22[0], dyn.rho33[0]) == (0.0, 0.0, 1.0)
    assert dyn.J1[0] == 0.0 and dyn.J2[0] == 0.0


def test_trace_conserved_at_machine_level():
    for model in (make_model(0.2, 10.0), make_model(5.0, 0.2, 0.5, 1.0)):
        _, dyn = run(model)
        assert np.abs(dyn.rho11 + dyn.rho22 + dyn.rho33 - 1.0).max() < 1e-12


def test_populations_stay_in_unit_interval():
    _, dyn = run(make_model(0.2, 10.0), t_max=60.0)
    for arr in (dyn.rho11, dyn.rho22, dyn.rho33):
        assert arr.min() >= -1e-10
        assert arr.max() <= 1.0 + 1e-10


def test_memoryless_proxy_decays_like_total_coupling():
    # gamma >> omega: population follows exp(-(c1+c2) t), branch ratio even
    model = make_model(200.0, 200.0)
    _, dyn = run(model, t_max=3.0)
    window = (dyn.times >= 0.1) & (dyn.times <= 3.0)
    expected = np.exp(-2.0 * dyn.times[window])
    rel = np.abs(dyn.rho33[window] - expected) / expected
    assert rel.max() < 0.03
    assert dyn.rho11[-1] == pytest.approx(0.5, abs=0.01)
    assert dyn.rho22[-1] == pytest.approx(0.5, abs=0.01)


def test_long_run_relaxes_and_lower_levels_flatten():
    for model in (make_model(0.2, 10.0), make_model(0.2, 1.0)):
        co = evolve_coefficients(model, IntegratorConfig(t_max=60.0, rho33_floor=1e-4))
        dyn = populations(co, model)
        assert dyn.rho33[-1] < 1e-3
        tail = dyn.times >= dyn.times[-1] - 1.0
        assert np.ptp(dyn.rho11[tail]) < 1e-3
        assert np.ptp(dyn.rho22[tail]) < 1e-3


def test_master_equation_residual_symmetric_model():
    co, dyn = run(make_model(1.0, 1.0), t_max=10.0)
    assert master_equation_residual(dyn, co) < 1e-4


def test_master_equation_residual_decays_quadratically():
    model = make_model(1.0, 1.0)
    res = []
    for dt in (2e-2, 1e-2, 5e-3):
        co, dyn = run(model, t_max=10.0, dt_out=dt)
        res.append(master_equation_residual(dyn, co))
    assert res[0] / res[1] == pytest.approx(4.0, rel=0.3)
    assert res[1] / res[2] == pytest.approx(4.0, rel=0.3)


def test_constant_coefficient_input_matches_exact_exponentials():
    # F_j pinned at coupling_j/2 gives rho33 = exp(-(c1+c2) t) exactly;
    # central differences on dt=1e-3 should leave only ~1e-9 defects
    c1, c2 = 0.1, 0.3
    dt = 1e-3
    times = dt * np.arange(5001)
    F1 = np.full(len(times), 0.5 * c1, complex)
    F2 = np.full(len(times), 0.5 * c2, complex)
    co = CoefficientTrajectory(
        times=times,
        F1=F1,
        F2=F2,
        Fbar1=0.5 * c1 * times.astype(complex),
        Fbar2=0.5 * c2 * times.astype(complex),
    )
    model = make_model(1.0, 1.0, c1, c2)
    dyn = populations(co, model)
    rate = c1 + c2
    assert np.abs(dyn.rho33 - np.exp(-rate * times)).max() < 1e-10
    assert master_equation_residual(dyn, co) < 1e-6


def test_zero_coupling_freezes_the_state():
    co, dyn = run(make_model(1.0, 1.0, 0.0, 0.0), t_max=5.0)
    assert np.abs(dyn.rho33 - 1.0).max() == 0.0
    assert master_equation_residual(dyn, co) == 0.0


def test_energy_balance_links_population_loss_to_currents():
    co, dyn = run(make_model(0.2, 10.0), t_max=20.0)
    assert flux_residual(dyn, omega=1.0, fd_order=4) < 1e-4


def test_current_sign_follows_coefficient_sign():
    co, dyn = run(make_model(0.2, 10.0), t_max=20.0)
    alive = dyn.rho33 > 1e-12
    assert np.all(np.sign(dyn.J1[alive]) == np.sign(co.F1.real[alive]))
    assert np.all(np.sign(dyn.J2[alive]) == np.sign(co.F2.real[alive]))


def test_population_gain_equals_integrated_channel_current():
    co, dyn = run(make_model(0.5, 2.0), t_max=30.0)
    gain1 = simpson(2.0 * co.F1.real * dyn.rho33, x=dyn.times)
    gain2 = simpson(2.0 * co.F2.real * dyn.rho33, x=dyn.times)
    assert abs(dyn.rho11[-1] - dyn.rho11[0] - gain1) < 1e-6
    assert abs(dyn.rho22[-1] - dyn.rho22[0] - gain2) < 1e-6


def test_survival_matches_closed_exponential_form():
    co, dyn = run(make_model(0.7, 3.0), t_max=20.0)
    closed_form = np.exp(-2.0 * (co.Fbar1.real + co.Fbar2.real))
    assert np.abs(dyn.rho33 - closed_form).max() < 1e-8


def test_fallback_quadrature_path_close_to_accumulated_path():
    model = make_model(0.5, 2.0)
    co, dyn = run(model, t_max=20.0)
    stripped = CoefficientTrajectory(
        times=co.times, F1=co.F1, F2=co.F2, Fbar1=co.Fbar1, Fbar2=co.Fbar2
    )
    fallback = populations(stripped, model)
    assert np.abs(fallback.rho33 - dyn.rho33).max() < 1e-8
    assert np.abs(fallback.rho11 - dyn.rho11).max() < 1e-4


def test_grid_mismatch_is_rejected():
    model = make_model(1.0, 1.0)
    co, dyn = run(model, t_max=5.0)
    other = evolve_coefficients(model, IntegratorConfig(t_max=4.0, rho33_floor=0.0))
    with pytest.raises(GridMismatchError):
        master_equation_residual(dyn, other)
