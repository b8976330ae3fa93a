"""Waiting-time distribution solver and count-rate saturation curves.

The survival function Omega(dt) — the probability that no detection has
been registered dt after the previous one — obeys

    Omega(dt + d) = Omega(dt) * (1 - eta(dt) * P(dt) * d),

where eta is the detector recovery curve and P(dt) = g2(dt) * I is the
conditional photon rate a time dt after a detection of a source with mean
rate I.  The registered count rate is the reciprocal mean waiting time.
Solving once with the actual recovery curve and once with a flat curve at
the recovered efficiency gives the saturated and unsaturated rates, whose
ratio is the rate-dependent efficiency epsilon(R).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .detector import TERCurve, constant_ter, eta_at, half_recovery_time
from .errors import (
    CapacityError,
    CoverageError,
    InstabilityError,
    NumericalError,
    ParameterError,
    TruncationError,
)
from .sources import PS_PER_S, SourceKind, SourceModel, g2_model

#: survival must fall below this at the end of the grid
OMEGA_FLOOR = 1e-6
#: forward-Euler steps above this per-step hazard are refused
MAX_STEP_HAZARD = 0.1
#: tabulated recovery curves refuse incident rates above this (1/s);
#: the survival grid would need submillimeter-of-a-picosecond resolution
MAX_TABULATED_RATE = 1e9
#: solver grid length guard
MAX_GRID_POINTS = 1 << 27


@dataclass
class WaitingTimeDistribution:
    """Survival curve or interarrival histogram on a uniform ps grid.

    origin is "solved" for a survival function Omega (starts at 1,
    nonincreasing) or "empirical" for histogram counts of measured
    interarrival times.
    """

    dt_ps: int
    omega: np.ndarray
    origin: str = "solved"

    def __post_init__(self):
        self.dt_ps = int(self.dt_ps)
        self.omega = np.asarray(self.omega, dtype=float)
        if self.dt_ps < 1:
            raise ParameterError("dt_ps must be a positive integer")
        if self.origin not in ("solved", "empirical"):
            raise ParameterError("origin must be 'solved' or 'empirical'")
        if self.omega.ndim != 1 or self.omega.size < 2:
            raise ParameterError("need at least two grid samples")

    @property
    def times_s(self) -> np.ndarray:
        return np.arange(self.omega.size) * (self.dt_ps / PS_PER_S)


@dataclass
class EfficiencyCurve:
    """Saturation curve: registered rate and efficiency vs incident rate."""

    R: np.ndarray
    R_prime: np.ndarray
    epsilon: np.ndarray = field(init=False)
    failures: list = field(default_factory=list)

    def __post_init__(self):
        self.R = np.asarray(self.R, dtype=float)
        self.R_prime = np.asarray(self.R_prime, dtype=float)
        if self.R.ndim != 1 or self.R.shape != self.R_prime.shape:
            raise ParameterError("R and R_prime must be matching 1-D arrays")
        if self.R.size < 1 or np.any(self.R <= 0):
            raise ParameterError("incident rates must be positive")
        if self.R.size > 1 and not np.all(np.diff(self.R) > 0):
            raise ParameterError("incident rates must be strictly ascending")
        eps = self.R_prime / self.R
        if np.any(eps > 1.005) or np.any(eps <= 0):
            raise ParameterError("epsilon = R_prime/R must lie in (0, 1]")
        self.epsilon = np.minimum(eps, 1.0)

    def epsilon_at(self, R):
        """Interpolate epsilon at incident rate(s) R (log-R axis)."""
        r = np.asarray(R, dtype=float)
        if np.any(r < self.R[0] * (1 - 1e-9)) or np.any(r > self.R[-1] * (1 + 1e-9)):
            raise CoverageError(
                f"rate range [{r.min():.3g}, {r.max():.3g}] outside the "
                f"curve coverage [{self.R[0]:.3g}, {self.R[-1]:.3g}]"
            )
        out = np.interp(np.log(r), np.log(self.R), self.epsilon)
        if np.ndim(R) == 0:
            return float(out)
        return out


def poisson_step_rate(R, t_d):
    """Registered rate for Poissonian light on a step-recovery detector.

    Every registration blinds the detector for exactly t_d, and Poisson
    arrivals are memoryless, so R' = R / (1 + R*t_d) in closed form.
    """
    R = np.asarray(R, dtype=float)
    out = R / (1.0 + R * t_d)
    if out.ndim == 0:
        return float(out)
    return out


def poisson_step_curve(t_d, R_values) -> EfficiencyCurve:
    """Analytic saturation curve R' = R/(1 + R*t_d)."""
    R = np.asarray(R_values, dtype=float)
    return EfficiencyCurve(R, poisson_step_rate(R, t_d))


#: target survival-grid length for auto-chosen steps
TARGET_GRID_POINTS = 8_000_000


def default_grid_dt(ter: TERCurve, model: SourceModel, I: float,
                    t_max: float | None = None) -> float:
    """Step size resolving the recovery edge, the correlation time, and
    keeping the per-step hazard near 1%.

    When the grid span t_max is known, the step is floored so the grid
    stays near TARGET_GRID_POINTS; at the low rates where that floor can
    bite, the waiting time is dominated by the flat exponential tail and
    the coarser step costs nothing measurable.
    """
    g2max = 2.0 if model.kind is SourceKind.THERMAL_BUNCHED else 1.0
    candidates = [0.01 / (I * g2max)]
    t_half = half_recovery_time(ter)
    if t_half > 0:
        candidates.append(t_half / 1000.0)
    if model.T > 0:
        candidates.append(model.T / 100.0)
    dt = min(candidates)
    if t_max is not None:
        dt = max(dt, t_max / TARGET_GRID_POINTS)
    return max(dt, 1.0 / PS_PER_S)


def solve_wtd(ter: TERCurve, model: SourceModel, I: float, grid_dt: float,
              t_max: float) -> WaitingTimeDistribution:
    """Forward-Euler integration of the survival recursion.

    The grid step is rounded to an integer picosecond count.  Raises if
    any per-step hazard exceeds 0.1 (unstable) or if the survival has not
    decayed below 1e-6 by t_max (truncated).  A detector/source pair with
    identically zero hazard legitimately never decays and is returned
    as-is (Omega = 1 everywhere).
    """
    if I <= 0:
        raise ParameterError("incident rate I must be positive")
    if grid_dt <= 0 or t_max <= grid_dt:
        raise ParameterError("need 0 < grid_dt < t_max")
    dt_ps = max(1, int(round(grid_dt * PS_PER_S)))
    dt_s = dt_ps / PS_PER_S
    n = int(round(t_max / dt_s)) + 1
    if n > MAX_GRID_POINTS:
        raise CapacityError(
            f"survival grid of {n} points exceeds {MAX_GRID_POINTS}; "
            "coarsen grid_dt or shorten t_max"
        )
    t = np.arange(n) * dt_s
    hazard = eta_at(ter, t) * g2_model(model, t) * I
    step = hazard * dt_s
    max_step = float(step.max())
    if max_step > MAX_STEP_HAZARD:
        raise InstabilityError(
            f"per-step hazard {max_step:.3g} exceeds {MAX_STEP_HAZARD}; "
            "refine grid_dt"
        )
    omega = np.empty(n)
    omega[0] = 1.0
    np.cumprod(1.0 - step[:-1], out=omega[1:])
    if max_step == 0.0:
        # no detection can ever occur; survival is identically 1
        return WaitingTimeDistribution(dt_ps, omega, "solved")
    if omega[-1] >= OMEGA_FLOOR:
        raise TruncationError(
            f"survival is {omega[-1]:.3g} at t_max = {t_max:.3g} s "
            f"(needs < {OMEGA_FLOOR:g}); extend t_max"
        )
    return WaitingTimeDistribution(dt_ps, omega, "solved")


def mean_waiting_time(wtd: WaitingTimeDistribution) -> float:
    """Mean waiting time from a solved survival curve.

    The expectation of a nonnegative waiting time equals the area under
    its survival function, E[w] = integral of Omega over dt, evaluated
    here trapezoidally.  (For the step-recovery Poisson case this gives
    t_d + 1/R and hence the closed-form saturation curve; a
    density-weighted average of the survival curve itself would not.)
    Requires the survival to have decayed at the grid end.
    """
    if wtd.origin != "solved":
        raise ParameterError("mean_waiting_time needs a solved survival curve")
    if wtd.omega[-1] >= OMEGA_FLOOR:
        raise TruncationError(
            f"survival is {wtd.omega[-1]:.3g} at the grid end; not decayed"
        )
    return float(np.trapezoid(wtd.omega, wtd.times_s))


def registered_rate(wtd: WaitingTimeDistribution) -> float:
    """Registered count rate: reciprocal mean waiting time."""
    return 1.0 / mean_waiting_time(wtd)


def _solve_rate(ter, model, I, grid_dt):
    """Registered rate for one incident rate, auto-extending t_max."""
    # survival tail decays at the fully recovered hazard; start from a
    # generous multiple and double on truncation
    t_half = half_recovery_time(ter)
    t_max = 2.0 * t_half + 5.0 * model.T + 20.0 / (ter.eta_inf * I)
    for _ in range(12):
        dt = grid_dt if grid_dt is not None else default_grid_dt(ter, model, I, t_max)
        try:
            return registered_rate(solve_wtd(ter, model, I, dt, t_max))
        except TruncationError:
            t_max *= 2.0
    raise TruncationError(
        f"survival would not decay below {OMEGA_FLOOR:g} even at "
        f"t_max = {t_max:.3g} s (I = {I:.3g}/s)"
    )


def rate_curve(ter: TERCurve, model: SourceModel, I_values, grid_dt=None,
               max_tabulated_rate=MAX_TABULATED_RATE) -> EfficiencyCurve:
    """Saturation curve over a sweep of incident rates.

    For each incident rate the survival recursion is solved twice: once
    with the actual recovery curve and once with a flat curve pinned at
    the recovered efficiency.  Only the *ratio* of the two solved rates
    is kept: the mean-field hazard g2(dt)*I is exact for Poissonian light
    but for correlated light it misses the slowdown from intensity
    fluctuations over long windows, a bias common to both solves that
    cancels in the ratio (as does the first-order Euler step bias, since
    the pair shares one step).  A detector with constant efficiency
    registers exactly eta_inf*I of any stationary stream, so the curve
    reports R = eta_inf*I and R' = ratio * R.

    Tabulated recovery curves refuse incident rates beyond 1e9/s, where
    the grid resolution required for a converged survival is impractical;
    such points are recorded in `failures` and skipped, and the whole
    sweep fails only if every point does.
    """
    I_values = np.atleast_1d(np.asarray(I_values, dtype=float))
    if np.any(I_values <= 0):
        raise ParameterError("incident rates must be positive")
    if I_values.size > 1 and not np.all(np.diff(I_values) > 0):
        raise ParameterError("incident rates must be strictly ascending")
    flat = constant_ter(ter.eta_inf)
    t_half = half_recovery_time(ter)
    R, R_prime, failures = [], [], []
    for I in I_values:
        if ter.kind != "heaviside" and I > max_tabulated_rate:
            failures.append((float(I), f"incident rate above {max_tabulated_rate:.3g}/s "
                             "cutoff for tabulated recovery curves"))
            continue
        # one shared step for both solves so that the first-order
        # integration bias cancels in the ratio epsilon = R'/R
        if grid_dt is None:
            t_max0 = 2.0 * t_half + 5.0 * model.T + 20.0 / (ter.eta_inf * I)
            dt = default_grid_dt(ter, model, I, t_max0)
        else:
            dt = grid_dt
        try:
            rp = _solve_rate(ter, model, I, dt)
            r = _solve_rate(flat, model, I, dt)
        except NumericalError as exc:
            failures.append((float(I), str(exc)))
            continue
        anchor = ter.eta_inf * I
        R.append(anchor)
        R_prime.append(rp / r * anchor)
    if not R:
        raise NumericalError(
            "no incident rate in the sweep produced a valid point: "
            + "; ".join(msg for _, msg in failures[:3])
        )
    curve = EfficiencyCurve(np.asarray(R), np.asarray(R_prime))
    curve.failures = failures
    return curve
