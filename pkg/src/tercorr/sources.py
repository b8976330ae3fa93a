"""Time-tagged photon stream generation for three archetype light sources.

Poissonian light carries no intensity correlations.  Bunched pseudothermal
light has a Gaussian second-order correlation peak, g2(tau) = 1 +
exp(-ln2 tau^2 / T^2), reaching 2 at zero delay; it is generated as a
doubly stochastic (Cox) process driven by the squared modulus of a complex
Gaussian field so that all higher-order moments come out right, not just
the pair correlation.  An ideal two-level emitter is antibunched,
g2(tau) = 1 - exp(-|tau|/T), and is generated as a renewal process whose
detection hazard ramps up exponentially after each emission.

All generators share an integer-picosecond time base and are deterministic
for a fixed seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate, optimize

from .errors import (
    CapacityError,
    GridTooCoarseError,
    InfeasibleRateError,
    NumericalError,
    ParameterError,
)

PS_PER_S = 1_000_000_000_000
LN2 = math.log(2.0)

# Memory guards: expected tag counts and intensity-grid cells per call.
MAX_EXPECTED_TAGS = 250_000_000
MAX_TRACE_CELLS = 25_000_000


class SourceKind(Enum):
    POISSONIAN = "poisson"
    THERMAL_BUNCHED = "thermal"
    TWO_LEVEL_ANTIBUNCHED = "antibunched"


@dataclass(frozen=True)
class SourceModel:
    """Archetype source: mean photon rate plus correlation timescale T.

    T is the half-width at half-maximum of the thermal correlation peak,
    or the recovery time of the antibunched dip.  It is ignored for
    Poissonian light and may be left at zero there.
    """

    kind: SourceKind
    mean_rate: float
    T: float = 0.0

    def __post_init__(self):
        if self.mean_rate <= 0:
            raise ParameterError("mean_rate must be positive")
        if self.kind is not SourceKind.POISSONIAN and self.T <= 0:
            raise ParameterError(f"{self.kind.value} source requires T > 0")


@dataclass
class TimeTagStream:
    """Sorted detection/emission times on one channel, integer picoseconds."""

    channel: int
    tags: np.ndarray
    duration_ps: int

    def __post_init__(self):
        self.tags = np.ascontiguousarray(self.tags, dtype=np.int64)
        self.duration_ps = int(self.duration_ps)
        if self.duration_ps <= 0:
            raise ParameterError("duration_ps must be positive")
        if self.tags.size:
            if self.tags[0] < 0 or self.tags[-1] > self.duration_ps:
                raise ParameterError("tags must lie within [0, duration_ps]")
            if self.tags.size > 1 and not np.all(np.diff(self.tags) > 0):
                raise ParameterError("tags must be strictly ascending")

    @property
    def n(self) -> int:
        return int(self.tags.size)

    @property
    def duration_s(self) -> float:
        return self.duration_ps / PS_PER_S

    @property
    def rate(self) -> float:
        """Observed tag rate in events per second."""
        return self.n / self.duration_s


@dataclass
class IntensityTrace:
    """Instantaneous rate (photons/s) sampled on a uniform grid."""

    dt_ps: int
    values: np.ndarray

    def __post_init__(self):
        self.dt_ps = int(self.dt_ps)
        self.values = np.asarray(self.values, dtype=float)
        if self.dt_ps <= 0:
            raise ParameterError("dt_ps must be positive")
        if self.values.ndim != 1 or self.values.size < 2:
            raise ParameterError("trace needs at least two grid cells")
        if np.any(self.values < 0):
            raise ParameterError("intensity values must be nonnegative")

    @property
    def duration_ps(self) -> int:
        return self.values.size * self.dt_ps

    @property
    def mean_rate(self) -> float:
        return float(self.values.mean())


def g2_model(model: SourceModel, tau):
    """Model second-order correlation g2(tau) for a source archetype.

    Accepts a scalar or array of delays in seconds; the sign of tau is
    irrelevant (all three models are symmetric).
    """
    t = np.asarray(tau, dtype=float)
    if model.kind is SourceKind.POISSONIAN:
        out = np.ones_like(t)
    elif model.kind is SourceKind.THERMAL_BUNCHED:
        out = 1.0 + np.exp(-LN2 * t * t / (model.T * model.T))
    else:
        out = 1.0 - np.exp(-np.abs(t) / model.T)
    if np.ndim(tau) == 0:
        return float(out)
    return out


def _check_capacity(expected: float, max_tags: int):
    if expected > max_tags:
        raise CapacityError(
            f"expected {expected:.3g} tags exceeds the budget of {max_tags:.3g}; "
            "lower the rate/duration or generate in segments"
        )


def _to_duration_ps(duration: float) -> int:
    if duration <= 0:
        raise ParameterError("duration must be positive")
    duration_ps = int(round(duration * PS_PER_S))
    if duration_ps < 1:
        raise ParameterError("duration is below the 1 ps resolution")
    return duration_ps


def sample_poisson_stream(rate, duration, seed, channel=0, max_tags=MAX_EXPECTED_TAGS):
    """Homogeneous Poisson stream of integer-picosecond tags.

    Conditioned on the total count, arrival times of a homogeneous Poisson
    process are i.i.d. uniform, so a single Poisson draw plus a sorted
    uniform block reproduces the process exactly.  Tags that collide at
    1 ps resolution keep only the first arrival.
    """
    if rate < 0:
        raise ParameterError("rate must be nonnegative")
    duration_ps = _to_duration_ps(duration)
    _check_capacity(rate * duration, max_tags)
    rng = np.random.default_rng(seed)
    n = rng.poisson(rate * duration)
    raw = np.floor(rng.random(n) * duration_ps).astype(np.int64)
    raw.sort()
    return TimeTagStream(channel, np.unique(raw), duration_ps)


def sample_thermal_intensity(mean_rate, T, duration, grid_dt, seed,
                             max_cells=MAX_TRACE_CELLS) -> IntensityTrace:
    """Pseudothermal intensity trace by spectral synthesis of a Gaussian field.

    A circular complex Gaussian field with autocorrelation
    g1(tau) = exp(-ln2 tau^2 / (2 T^2)) is built in Fourier space; its
    squared modulus is an intensity with exponential one-point statistics
    and g2(tau) = 1 + |g1|^2 = 1 + exp(-ln2 tau^2 / T^2).  The trace is
    periodic over the requested duration (circulant embedding), which is
    harmless once duration >> T.
    """
    if mean_rate <= 0 or T <= 0:
        raise ParameterError("mean_rate and T must be positive")
    if grid_dt <= 0:
        raise ParameterError("grid_dt must be positive")
    if grid_dt > T / 10 * (1 + 1e-9):
        raise GridTooCoarseError(
            f"grid_dt = {grid_dt:.3g} s too coarse for T = {T:.3g} s; need <= T/10"
        )
    n = int(round(duration / grid_dt))
    if n < 16:
        raise ParameterError("duration spans fewer than 16 grid cells")
    if n > max_cells:
        raise CapacityError(
            f"{n} grid cells exceed the budget of {max_cells}; "
            "shorten the segment or coarsen the grid"
        )
    dt_ps = int(round(grid_dt * PS_PER_S))
    if dt_ps < 1:
        raise ParameterError("grid_dt is below the 1 ps resolution")

    rng = np.random.default_rng(seed)
    k = np.arange(n, dtype=float)
    lag = np.minimum(k, n - k) * grid_dt
    r = np.exp(-LN2 * lag * lag / (2.0 * T * T))
    del lag
    spectrum = np.fft.fft(r).real
    del r
    np.maximum(spectrum, 0.0, out=spectrum)
    w = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    w *= np.sqrt(spectrum)
    field = np.fft.ifft(w)
    del w
    intensity = np.abs(field) ** 2
    del field
    # <|E|^2> = 2 sum(S) / n^2 for unit-variance real/imag components
    ensemble_mean = 2.0 * spectrum.sum() / (n * n)
    intensity *= mean_rate / ensemble_mean
    return IntensityTrace(dt_ps, intensity)


def sample_doubly_stochastic_stream(trace: IntensityTrace, seed, channel=0,
                                    max_tags=MAX_EXPECTED_TAGS) -> TimeTagStream:
    """Cox-process tags driven by an intensity trace.

    Each grid cell receives a Poisson count with mean rate*dt, placed
    uniformly inside the cell; 1 ps collisions keep the first arrival.
    """
    dt_s = trace.dt_ps / PS_PER_S
    lam = trace.values * dt_s
    _check_capacity(float(lam.sum()), max_tags)
    rng = np.random.default_rng(seed)
    counts = rng.poisson(lam)
    total = int(counts.sum())
    cells = np.repeat(np.arange(trace.values.size, dtype=np.int64), counts)
    offsets = np.floor(rng.random(total) * trace.dt_ps).astype(np.int64)
    raw = cells * trace.dt_ps + offsets
    raw.sort()
    return TimeTagStream(channel, np.unique(raw), trace.duration_ps)


def _integrated_hazard(u, lam0, T):
    # H(u) = lam0 * (u + T*(exp(-u/T) - 1)); expm1 keeps small-u precision
    return lam0 * (u + T * np.expm1(-u / T))


def _mean_interval(lam0, T):
    """Mean renewal interval for hazard lam0*(1 - exp(-u/T))."""
    # Survival exp(-H(u)) ~ exp(lam0*T) * exp(-lam0*u) at large u
    upper = T - math.log(1e-15) / lam0
    val, _ = integrate.quad(
        lambda x: math.exp(-_integrated_hazard(x, lam0, T)),
        0.0, upper, limit=200,
    )
    return val


def _hazard_scale(rate, T):
    """Asymptotic hazard giving a requested mean emission rate.

    The hazard never exceeds its asymptote, so the mean interval at
    lam0 = rate already overshoots the target; the upper bracket grows
    geometrically until it undershoots.
    """
    target = 1.0 / rate
    lo = rate
    hi = rate / (1.0 - rate * T)
    for _ in range(200):
        if _mean_interval(hi, T) < target:
            break
        hi *= 2.0
    else:
        raise NumericalError("failed to bracket the hazard scale")
    return optimize.brentq(
        lambda l: _mean_interval(l, T) - target, lo, hi, rtol=1e-13
    )


def _invert_integrated_hazard(e, lam0, T, n_grid=1 << 15):
    # H(u) >= lam0*(u - T), so u_max below is guaranteed to cover e.max()
    u_max = T + float(e.max()) / lam0
    grid = u_max * np.linspace(0.0, 1.0, n_grid + 1) ** 2
    h = _integrated_hazard(grid, lam0, T)
    return np.interp(e, h, grid)


def sample_antibunched_stream(rate, T, duration, seed, channel=0,
                              max_tags=MAX_EXPECTED_TAGS) -> TimeTagStream:
    """Renewal stream with an exponentially recovering emission hazard.

    After each emission the hazard restarts at zero and relaxes to its
    asymptote with timescale T, which reproduces the two-level dip
    g2(tau) = 1 - exp(-|tau|/T) at low rate.  Intervals are drawn by
    inverting the integrated hazard against unit exponential deviates.
    """
    if rate < 0:
        raise ParameterError("rate must be nonnegative")
    if T <= 0:
        raise ParameterError("T must be positive")
    duration_ps = _to_duration_ps(duration)
    if rate == 0:
        return TimeTagStream(channel, np.empty(0, dtype=np.int64), duration_ps)
    if rate * T >= 1.0:
        raise InfeasibleRateError(
            f"rate*T = {rate * T:.3g} >= 1: the emitter cannot cycle that fast"
        )
    expected = rate * duration
    _check_capacity(expected, max_tags)
    lam0 = _hazard_scale(rate, T)
    rng = np.random.default_rng(seed)

    parts = []
    t = 0.0
    batch = int(expected * 1.05 + 4.0 * math.sqrt(expected + 1.0) + 64)
    produced = 0
    while t < duration:
        e = rng.exponential(size=batch)
        w = _invert_integrated_hazard(e, lam0, T)
        times = t + np.cumsum(w)
        keep = times < duration
        parts.append(times[keep])
        produced += int(keep.sum())
        _check_capacity(produced, int(max_tags * 1.1))
        t = float(times[-1])
    raw = np.floor(np.concatenate(parts) * PS_PER_S).astype(np.int64)
    return TimeTagStream(channel, np.unique(raw), duration_ps)


def merge_streams(streams, channel=0) -> TimeTagStream:
    """Union of several streams on a common clock (e.g. undoing a split)."""
    if not streams:
        raise ParameterError("need at least one stream")
    duration_ps = streams[0].duration_ps
    if any(s.duration_ps != duration_ps for s in streams):
        raise ParameterError("streams must share a duration")
    tags = np.concatenate([s.tags for s in streams])
    tags.sort(kind="mergesort")
    return TimeTagStream(channel, np.unique(tags), duration_ps)
