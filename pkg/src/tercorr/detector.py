"""Detector response: efficiency recovery curves and stream thinning.

A detector is idle until it registers an event; from that moment its
efficiency follows a recovery curve eta(dt), where dt is the elapsed time
since the last *registered* event.  Missed photons do not reset the clock.
Two curve families are supported: an idealized step (zero efficiency for a
dead interval t_d, full efficiency after) and a tabulated curve measured on
real hardware, evaluated by linear interpolation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ParameterError
from .sources import PS_PER_S, TimeTagStream

HEAVISIDE = "heaviside"
TABULATED = "tabulated"


@dataclass(frozen=True)
class TERCurve:
    """Temporal efficiency recovery eta(dt).

    kind is "heaviside" (parameterized by t_d_ps) or "tabulated"
    (parameterized by a sample grid).  eta_inf is the fully recovered
    efficiency used for dt beyond the table and for an idle detector.
    """

    kind: str
    eta_inf: float
    t_d_ps: int | None = None
    dt_ps: np.ndarray | None = None
    eta: np.ndarray | None = None


def heaviside_ter(t_d: float) -> TERCurve:
    """Step recovery: blind for t_d seconds, then fully efficient."""
    if t_d <= 0:
        raise ParameterError("t_d must be positive")
    t_d_ps = int(round(t_d * PS_PER_S))
    if t_d_ps < 1:
        raise ParameterError("t_d is below the 1 ps resolution")
    return TERCurve(kind=HEAVISIDE, eta_inf=1.0, t_d_ps=t_d_ps)


def tabulated_ter(dt_ps, eta, eta_inf=None) -> TERCurve:
    """Recovery curve from samples on an ascending integer-ps grid.

    Values are clipped to [0, 1].  If eta_inf is not given it defaults to
    the mean of the last 10% of samples (at least one), which is also the
    convention used when reading curve files.
    """
    dt_ps = np.ascontiguousarray(dt_ps, dtype=np.int64)
    eta = np.clip(np.asarray(eta, dtype=float), 0.0, 1.0)
    if dt_ps.ndim != 1 or dt_ps.size < 2 or eta.shape != dt_ps.shape:
        raise ParameterError("need matching 1-D arrays with >= 2 samples")
    if not np.all(np.diff(dt_ps) > 0):
        raise ParameterError("dt_ps grid must be strictly ascending")
    if dt_ps[0] < 0:
        raise ParameterError("dt_ps grid must be nonnegative")
    if eta_inf is None:
        tail = max(1, eta.size // 10)
        eta_inf = float(eta[-tail:].mean())
    if not 0.0 < eta_inf <= 1.0:
        raise ParameterError("eta_inf must lie in (0, 1]")
    return TERCurve(kind=TABULATED, eta_inf=float(eta_inf), dt_ps=dt_ps, eta=eta)


def constant_ter(eta0: float) -> TERCurve:
    """Flat response with no recovery structure (efficiency eta0 always)."""
    if not 0.0 < eta0 <= 1.0:
        raise ParameterError("eta0 must lie in (0, 1]")
    return tabulated_ter(np.array([0, PS_PER_S]), np.array([eta0, eta0]),
                         eta_inf=eta0)


def default_snspd_ter(t_half=43e-9, shape=4.0, spacing_ps=200,
                      span=6.0) -> TERCurve:
    """Smooth stand-in for a measured superconducting-detector recovery.

    eta(dt) = 1 - 2**(-(dt/t_half)**shape): zero at dt = 0, exactly 50%
    recovered at t_half, saturating at 1.  Tabulated every spacing_ps up
    to span*t_half, matching the cadence of a sampled hardware curve.
    """
    if t_half <= 0 or shape <= 0:
        raise ParameterError("t_half and shape must be positive")
    n = int(round(span * t_half * PS_PER_S / spacing_ps))
    grid = np.arange(n + 1, dtype=np.int64) * spacing_ps
    x = grid / (t_half * PS_PER_S)
    eta = 1.0 - np.exp2(-(x ** shape))
    return tabulated_ter(grid, eta, eta_inf=1.0)


def eta_at(ter: TERCurve, dt):
    """Efficiency at elapsed time dt (seconds; scalar or array)."""
    d = np.asarray(dt, dtype=float) * PS_PER_S
    if ter.kind == HEAVISIDE:
        out = np.where(d >= ter.t_d_ps, ter.eta_inf, 0.0)
    else:
        out = np.interp(d, ter.dt_ps, ter.eta,
                        left=ter.eta[0], right=ter.eta_inf)
    if np.ndim(dt) == 0:
        return float(out)
    return out


def half_recovery_time(ter: TERCurve) -> float:
    """Time (s) to reach half the fully recovered efficiency.

    Zero for curves that start at or above eta_inf/2 (e.g. flat curves).
    """
    if ter.kind == HEAVISIDE:
        return ter.t_d_ps / PS_PER_S
    target = 0.5 * ter.eta_inf
    above = np.nonzero(ter.eta >= target)[0]
    if above.size == 0:
        return ter.dt_ps[-1] / PS_PER_S
    i = int(above[0])
    if i == 0:
        return 0.0
    t0, t1 = ter.dt_ps[i - 1], ter.dt_ps[i]
    e0, e1 = ter.eta[i - 1], ter.eta[i]
    if e1 == e0:
        return t1 / PS_PER_S
    return (t0 + (target - e0) / (e1 - e0) * (t1 - t0)) / PS_PER_S


@dataclass(frozen=True)
class DetectorConfig:
    """Recovery curve plus a recovery-independent intrinsic efficiency."""

    ter: TERCurve
    intrinsic_efficiency: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.intrinsic_efficiency <= 1.0:
            raise ParameterError("intrinsic_efficiency must lie in (0, 1]")


_EMPTY_GRID = np.zeros(2, dtype=np.int64)
_EMPTY_ETA = np.zeros(2, dtype=float)


def detect(stream: TimeTagStream, config: DetectorConfig, seed,
           chunk_size=10_000_000) -> TimeTagStream:
    """Thin a photon stream through the recovery-dependent efficiency.

    Each incoming tag is accepted with probability
    intrinsic_efficiency * eta(t - t_last), where t_last is the previous
    accepted tag; the first tag sees an idle detector.  The scan is
    sequential by nature (acceptance changes the state seen by later
    tags) and runs in a compiled kernel, chunked to bound the size of the
    uniform-deviate block.
    """
    ter = config.ter
    if ter.kind == HEAVISIDE:
        kind, t_d_ps = _kernels.TER_HEAVISIDE, ter.t_d_ps
        grid, eta = _EMPTY_GRID, _EMPTY_ETA
    else:
        kind, t_d_ps = _kernels.TER_TABULATED, 0
        grid, eta = ter.dt_ps, ter.eta
    rng = np.random.default_rng(seed)
    parts = []
    last = np.int64(-1)
    for start in range(0, stream.n, chunk_size):
        chunk = stream.tags[start:start + chunk_size]
        u = rng.random(chunk.size)
        kept, last = _kernels.thin_recovery(
            chunk, u, kind, t_d_ps, grid, eta, ter.eta_inf,
            config.intrinsic_efficiency, last,
        )
        parts.append(kept)
    tags = np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
    return TimeTagStream(stream.channel, tags, stream.duration_ps)


def split_stream(stream: TimeTagStream, m: int, seed) -> list[TimeTagStream]:
    """Route each tag to one of m output channels uniformly at random.

    Models an ideal balanced 1-to-m splitter: outputs are numbered
    0..m-1, tags are conserved exactly, and order is preserved.
    """
    if m < 1:
        raise ParameterError("m must be at least 1")
    if m == 1:
        return [TimeTagStream(stream.channel, stream.tags.copy(),
                              stream.duration_ps)]
    rng = np.random.default_rng(seed)
    assign = rng.integers(0, m, size=stream.n)
    return [TimeTagStream(k, stream.tags[assign == k], stream.duration_ps)
            for k in range(m)]
