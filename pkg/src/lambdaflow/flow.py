"""Classification of instantaneous flow regimes and interval detection.

The sign pair (Re F1, Re F2) fixes the transport situation: both
positive means the system releases energy to both baths, both negative
means it absorbs from both, and opposite signs mark unidirectional flow
across the system. A small absolute dead band suppresses classification
chatter at tangential zero crossings.

Direction codes used throughout: +1 for left-to-right flow (absorbing
from the left bath, releasing to the right), -1 for right-to-left,
0 for none.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .coefficients import CoefficientTrajectory, IntegratorConfig, evolve_coefficients
from .dynamics import populations
from .model import ModelSpec, swap_baths

DEFAULT_EPS = 1e-6
DEFAULT_MIN_LEN = 1e-2

DIRECTION_NONE = 0
DIRECTION_LR = 1
DIRECTION_RL = -1


class FlowRegime(enum.Enum):
    """Instantaneous transport situation, tagged by its report code."""

    RELEASE_BOTH = "A"
    LEFTWARD = "B"  # releasing left, absorbing right: flow right-to-left
    RIGHTWARD = "C"  # absorbing left, releasing right: flow left-to-right
    ABSORB_BOTH = "D"
    INDETERMINATE = "I"

    @property
    def code(self) -> str:
        return self.value


_UNIDIRECTIONAL = {FlowRegime.LEFTWARD: DIRECTION_RL, FlowRegime.RIGHTWARD: DIRECTION_LR}


def classify(re_f1: float, re_f2: float, eps: float = DEFAULT_EPS) -> FlowRegime:
    """Classify one sign pair with an absolute dead band of half-width eps."""
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if re_f1 > eps and re_f2 > eps:
        return FlowRegime.RELEASE_BOTH
    if re_f1 < -eps and re_f2 < -eps:
        return FlowRegime.ABSORB_BOTH
    if re_f1 > eps and re_f2 < -eps:
        return FlowRegime.LEFTWARD
    if re_f1 < -eps and re_f2 > eps:
        return FlowRegime.RIGHTWARD
    return FlowRegime.INDETERMINATE


def classify_grid(
    re_f1: np.ndarray, re_f2: np.ndarray, eps: float = DEFAULT_EPS
) -> np.ndarray:
    """Vectorised regime codes ('A'..'D', 'I') for a whole trajectory."""
    codes = np.full(len(re_f1), "I", dtype="U1")
    codes[(re_f1 > eps) & (re_f2 > eps)] = "A"
    codes[(re_f1 < -eps) & (re_f2 < -eps)] = "D"
    codes[(re_f1 > eps) & (re_f2 < -eps)] = "B"
    codes[(re_f1 < -eps) & (re_f2 > eps)] = "C"
    return codes


@dataclass(frozen=True)
class Interval:
    """One maximal unidirectional window.

    peak_magnitude is the largest value of min(|Re F1|, |Re F2|) over
    the window's grid points: the size of the weaker of the two
    coefficient lobes, which bounds the unidirectional character.
    """

    t_start: float
    t_end: float
    direction: int
    peak_magnitude: float

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


@dataclass
class IntervalReport:
    """Ordered, disjoint unidirectional windows found in one trajectory."""

    intervals: list[Interval] = field(default_factory=list)

    @property
    def first_duration(self) -> float:
        return self.intervals[0].duration if self.intervals else 0.0

    @property
    def first_direction(self) -> int:
        return self.intervals[0].direction if self.intervals else DIRECTION_NONE

    def __len__(self) -> int:
        return len(self.intervals)


def _refine_entry(t0, t1, f_prev, f_here, threshold):
    """Crossing time of a linearly interpolated signal, measured from t0."""
    df = f_here - f_prev
    if df == 0.0:
        return t1
    theta = (threshold - f_prev) / df
    theta = min(max(theta, 0.0), 1.0)
    return t0 + theta * (t1 - t0)


def detect_intervals(
    coeffs: CoefficientTrajectory,
    eps: float = DEFAULT_EPS,
    min_len: float = DEFAULT_MIN_LEN,
) -> IntervalReport:
    """Scan a trajectory for maximal unidirectional runs.

    Boundary crossings are refined by linear interpolation of whichever
    Re F_j enters or leaves its dead-band edge. Runs of equal direction
    separated only by indeterminate gaps shorter than min_len are
    merged; surviving runs shorter than min_len are dropped.
    """
    if eps < 0 or min_len < 0:
        raise ValueError("eps and min_len must be >= 0")
    t = coeffs.times
    f1 = coeffs.F1.real
    f2 = coeffs.F2.real
    n = len(t)

    direction = np.zeros(n, dtype=np.int8)
    direction[(f1 > eps) & (f2 < -eps)] = DIRECTION_RL
    direction[(f1 < -eps) & (f2 > eps)] = DIRECTION_LR
    indeterminate = (np.abs(f1) <= eps) | (np.abs(f2) <= eps)

    raw: list[Interval] = []
    spans: list[tuple[int, int]] = []
    i = 0
    while i < n:
        d = direction[i]
        if d == 0:
            i += 1
            continue
        j = i
        while j + 1 < n and direction[j + 1] == d:
            j += 1

        # entry: last of the two conditions to become true
        t_start = t[i]
        if i > 0:
            cand = []
            # thresholds the entering signals must cross, by direction
            thr1 = eps if d == DIRECTION_RL else -eps
            thr2 = -eps if d == DIRECTION_RL else eps
            ok1_prev = f1[i - 1] > eps if d == DIRECTION_RL else f1[i - 1] < -eps
            ok2_prev = f2[i - 1] < -eps if d == DIRECTION_RL else f2[i - 1] > eps
            if not ok1_prev:
                cand.append(_refine_entry(t[i - 1], t[i], f1[i - 1], f1[i], thr1))
            if not ok2_prev:
                cand.append(_refine_entry(t[i - 1], t[i], f2[i - 1], f2[i], thr2))
            if cand:
                t_start = max(cand)

        # exit: first condition to fail after the run
        t_end = t[j]
        if j + 1 < n:
            cand = []
            thr1 = eps if d == DIRECTION_RL else -eps
            thr2 = -eps if d == DIRECTION_RL else eps
            ok1_next = f1[j + 1] > eps if d == DIRECTION_RL else f1[j + 1] < -eps
            ok2_next = f2[j + 1] < -eps if d == DIRECTION_RL else f2[j + 1] > eps
            if not ok1_next:
                cand.append(_refine_entry(t[j], t[j + 1], f1[j], f1[j + 1], thr1))
            if not ok2_next:
                cand.append(_refine_entry(t[j], t[j + 1], f2[j], f2[j + 1], thr2))
            if cand:
                t_end = min(cand)

        peak = float(np.minimum(np.abs(f1[i : j + 1]), np.abs(f2[i : j + 1])).max())
        raw.append(Interval(float(t_start), float(t_end), int(d), peak))
        spans.append((i, j))
        i = j + 1

    # merge same-direction runs split only by short indeterminate gaps
    merged: list[Interval] = []
    merged_spans: list[tuple[int, int]] = []
    for iv, (a, b) in zip(raw, spans):
        if merged:
            prev = merged[-1]
            gap_all_indet = bool(indeterminate[merged_spans[-1][1] + 1 : a].all())
            if (
                iv.direction == prev.direction
                and iv.t_start - prev.t_end < min_len
                and gap_all_indet
            ):
                merged.pop()
                pa, _ = merged_spans.pop()
                merged.append(
                    Interval(
                        prev.t_start,
                        iv.t_end,
                        iv.direction,
                        max(prev.peak_magnitude, iv.peak_magnitude),
                    )
                )
                merged_spans.append((pa, b))
                continue
        merged.append(iv)
        merged_spans.append((a, b))

    kept = [iv for iv in merged if iv.duration >= min_len]
    return IntervalReport(intervals=kept)


def duration_map_point(
    model: ModelSpec,
    cfg: IntegratorConfig,
    eps: float = DEFAULT_EPS,
    min_len: float = DEFAULT_MIN_LEN,
) -> tuple[float, int]:
    """First-occurrence unidirectional duration and direction for one model."""
    coeffs = evolve_coefficients(model, cfg)
    report = detect_intervals(coeffs, eps=eps, min_len=min_len)
    return report.first_duration, report.first_direction


@dataclass
class GeometryResult:
    """One diode geometry: its model, detected windows, and flow scalars."""

    model: ModelSpec
    intervals: IntervalReport
    peak_rate: float
    peak_bottleneck_current: float


@dataclass
class DiodeReport:
    """Forward/reversed geometry comparison.

    peak_rate is the maximum, over the first unidirectional window, of
    the flow rate into the receiving bath measured by Re F of the
    receiving channel (current per unit excited population, the
    dimensionless scalar the transfer is measured by). The asymmetry
    ratio is reversed peak_rate over forward peak_rate; a value away
    from 1 with unequal couplings is the transient diode signature.
    The bottleneck current max_t min(|J1|, |J2|) is recorded alongside
    for post-hoc analysis.
    """

    forward: GeometryResult
    reverse: GeometryResult
    asymmetry_ratio: float


def _geometry_result(
    model: ModelSpec, cfg: IntegratorConfig, eps: float, min_len: float
) -> GeometryResult:
    coeffs = evolve_coefficients(model, cfg)
    dyn = populations(coeffs, model)
    report = detect_intervals(coeffs, eps=eps, min_len=min_len)
    peak_rate = 0.0
    peak_bottleneck = 0.0
    if report.intervals:
        first = report.intervals[0]
        mask = (coeffs.times >= first.t_start) & (coeffs.times <= first.t_end)
        recv = coeffs.F1.real if first.direction == DIRECTION_RL else coeffs.F2.real
        peak_rate = float(recv[mask].max())
        peak_bottleneck = float(
            np.minimum(np.abs(dyn.J1[mask]), np.abs(dyn.J2[mask])).max()
        )
    return GeometryResult(
        model=model,
        intervals=report,
        peak_rate=peak_rate,
        peak_bottleneck_current=peak_bottleneck,
    )


def diode_compare(
    model_forward: ModelSpec,
    cfg: IntegratorConfig,
    eps: float = DEFAULT_EPS,
    min_len: float = DEFAULT_MIN_LEN,
) -> DiodeReport:
    """Run the forward geometry and its memory-swapped reverse, compare flows."""
    fwd = _geometry_result(model_forward, cfg, eps, min_len)
    rev = _geometry_result(swap_baths(model_forward), cfg, eps, min_len)
    ratio = float("nan")
    if fwd.peak_rate > 0.0:
        ratio = rev.peak_rate / fwd.peak_rate
    return DiodeReport(forward=fwd, reverse=rev, asymmetry_ratio=ratio)
