"""Oracle-equivalence suite behind the `validate` subcommand.

Sweeps the closed coefficient equations against the direct two-time
quadrature oracle over a 12-point bath-parameter matrix (the left bath
takes each (gamma, coupling) combination, the right bath is pinned at
gamma = coupling = 1 so the two channels stay distinct), plus the
proportional-kernel collinearity identity. Every check reports its
measured defect against the fixed tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefficients import IntegratorConfig, evolve_coefficients, quadrature_oracle
from .model import BathSpec, ModelSpec

ORACLE_GAMMAS = (0.2, 1.0, 5.0, 10.0)
ORACLE_COUPLINGS = (0.5, 1.0, 2.0)
ORACLE_T_MAX = 10.0
ORACLE_DT = 1e-3
ORACLE_TOL = 1e-5
COLLINEARITY_TOL = 1e-8


@dataclass
class CheckResult:
    name: str
    measured: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.measured < self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: measured {self.measured:.3e} (tol {self.tolerance:.0e})"


def oracle_matrix_checks(
    t_max: float = ORACLE_T_MAX, dt: float = ORACLE_DT
) -> list[CheckResult]:
    """Closed-form vs quadrature-oracle agreement over the parameter matrix."""
    results = []
    stride = max(1, int(round(1e-2 / dt)))
    cfg = IntegratorConfig(t_max=t_max, dt_out=dt * stride, rho33_floor=0.0)
    for gamma in ORACLE_GAMMAS:
        for coupling in ORACLE_COUPLINGS:
            model = ModelSpec(
                bath_left=BathSpec(gamma=gamma, coupling=coupling),
                bath_right=BathSpec(gamma=1.0, coupling=1.0),
            )
            oracle = quadrature_oracle(model, t_max, dt)
            closed = evolve_coefficients(model, cfg)
            err = max(
                np.abs(oracle.F1[::stride] - closed.F1).max(),
                np.abs(oracle.F2[::stride] - closed.F2).max(),
            )
            results.append(
                CheckResult(
                    name=f"oracle gamma={gamma:g} coupling={coupling:g}",
                    measured=float(err),
                    tolerance=ORACLE_TOL,
                )
            )
    return results


def collinearity_check() -> CheckResult:
    """Equal kernels force F2/coupling2 = F1/coupling1 pointwise."""
    model = ModelSpec(
        bath_left=BathSpec(gamma=0.7, coupling=1.0),
        bath_right=BathSpec(gamma=0.7, coupling=3.0),
    )
    oracle = quadrature_oracle(model, 10.0, ORACLE_DT)
    defect = np.abs(oracle.F2 - 3.0 * oracle.F1).max()
    return CheckResult(
        name="proportional-kernel collinearity (oracle)",
        measured=float(defect),
        tolerance=COLLINEARITY_TOL,
    )


def run_validation(verbose: bool = True) -> bool:
    """Run every check; print one line per check; True when all pass."""
    checks = oracle_matrix_checks()
    checks.append(collinearity_check())
    ok = True
    for check in checks:
        ok &= check.passed
        if verbose:
            print(check.line())
    if verbose:
        print("validation:", "PASS" if ok else "FAIL")
    return ok
