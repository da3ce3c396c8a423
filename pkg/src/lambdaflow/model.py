"""Physical configuration of the three-level system and its two baths.

Conventions (natural units, hbar = 1):
- The excited level |3> sits an energy omega above the two degenerate
  lower levels |1> and |2>. We set omega = 1, so rates are measured in
  units of omega and times in units of 1/omega.
- Channel 1 connects |3> -> |1> to the left bath, channel 2 connects
  |3> -> |2> to the right bath.
- Each zero-temperature bath is characterised by a memory parameter
  gamma (inverse correlation time) and a coupling strength. Its two-time
  correlation function is (coupling * gamma / 2) * exp(-gamma |t - s|),
  a Lorentzian spectrum. Small gamma means long memory; gamma -> inf is
  the memoryless limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError

KERNEL_EXPONENTIAL = "exponential"
_KNOWN_KERNELS = (KERNEL_EXPONENTIAL,)

_POPULATION_SUM_TOL = 1e-12


@dataclass(frozen=True)
class BathSpec:
    """One bath: memory parameter, coupling strength, kernel family.

    gamma must be strictly positive: the exponential kernel is undefined
    at gamma = 0 and the memoryless limit is only ever approached.
    """

    gamma: float
    coupling: float
    kernel: str = KERNEL_EXPONENTIAL

    def __post_init__(self) -> None:
        if not self.gamma > 0:
            raise ValidationError(f"gamma must be positive, got {self.gamma}")
        if self.coupling < 0:
            raise ValidationError(f"coupling must be >= 0, got {self.coupling}")
        if self.kernel not in _KNOWN_KERNELS:
            raise ValidationError(f"unknown kernel family {self.kernel!r}")


@dataclass(frozen=True)
class ModelSpec:
    """Full physical configuration: splitting, two baths, initial populations."""

    bath_left: BathSpec
    bath_right: BathSpec
    omega: float = 1.0
    initial_populations: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self) -> None:
        if not self.omega > 0:
            raise ValidationError(f"omega must be positive, got {self.omega}")
        pops = self.initial_populations
        if len(pops) != 3:
            raise ValidationError("initial_populations must have three entries")
        for p in pops:
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"population {p} outside [0, 1]")
        if abs(sum(pops) - 1.0) > _POPULATION_SUM_TOL:
            raise ValidationError(
                f"initial populations must sum to 1, got {sum(pops)!r}"
            )
        object.__setattr__(self, "initial_populations", tuple(float(p) for p in pops))


def correlation(bath: BathSpec, t: float, s: float) -> complex:
    """Two-time bath correlation (coupling*gamma/2) * exp(-gamma|t-s|).

    Returned as complex with zero imaginary part; other kernel families
    could carry phases through the same signature.
    """
    return complex(0.5 * bath.coupling * bath.gamma * math.exp(-bath.gamma * abs(t - s)))


def swap_baths(model: ModelSpec) -> ModelSpec:
    """Exchange the two memory parameters, keeping each channel's coupling.

    Builds the reversed geometry used in the diode comparison: memory
    times swap sides while the interaction energies stay put.
    """
    return ModelSpec(
        bath_left=BathSpec(
            gamma=model.bath_right.gamma,
            coupling=model.bath_left.coupling,
            kernel=model.bath_left.kernel,
        ),
        bath_right=BathSpec(
            gamma=model.bath_left.gamma,
            coupling=model.bath_right.coupling,
            kernel=model.bath_right.kernel,
        ),
        omega=model.omega,
        initial_populations=model.initial_populations,
    )
