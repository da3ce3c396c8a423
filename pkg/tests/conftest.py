import numpy as np
import pytest

from lambdaflow import (
    BathSpec,
    IntegratorConfig,
    ModelSpec,
    ensemble_average,
    evolve_coefficients,
    quadrature_oracle,
)


@pytest.fixture(scope="session", autouse=True)
def warm_jit_kernels():
    """Compile (or load from cache) the jitted kernels once per session so
    runtime-budget assertions measure compute, not compilation."""
    model = ModelSpec(bath_left=BathSpec(1.0, 1.0), bath_right=BathSpec(1.0, 1.0))
    cfg = IntegratorConfig(t_max=0.1, rho33_floor=0.0)
    evolve_coefficients(model, cfg)
    quadrature_oracle(model, 0.05, 1e-2)
    ensemble_average(model, cfg, n_traj=2, seed=0)
