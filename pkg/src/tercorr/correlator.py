"""Cross-correlation histograms, n-fold coincidences, and the analytic
suppression of measured correlations by rate-dependent efficiency.

Histograms use centered delay bins and are normalized by the accidental
(uncorrelated) coincidence level, so a flat unit baseline means Poisson
statistics.  The zero-delay n-th-order correlation of split streams is
estimated from same-bin coincidence counts on a shared absolute time
grid.  The analytic estimator integrates the saturating efficiency
against the exponential intensity distribution of thermal light:

    g_n = Int eps(R)^n x^n e^-x dx / (Int eps(R) x e^-x dx)^n,  x = R/<R>,

which collapses to n! when eps is constant — the ideal thermal value —
and sinks toward 1 as saturation weights the bright intensity excursions
down.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import _kernels
from .errors import (
    CoverageError,
    EmptyStreamError,
    InsufficientDataError,
    NumericalError,
    ParameterError,
)
from .sources import PS_PER_S, TimeTagStream
from .wtd import EfficiencyCurve

#: default correlation-histogram bin width
DEFAULT_BIN_PS = 100

#: quadrature window for the suppression integral, in units of <R>
QUAD_X_LO = 1e-4
QUAD_X_HI = 20.0


@dataclass
class CorrelationHistogram:
    """Delay histogram between two or three channels.

    axes holds the centered delay grids (ps) per dimension; counts the
    raw coincidences; normalized the counts divided by the accidental
    level so that uncorrelated streams sit at 1.
    """

    order: int
    bin_ps: int
    axes: tuple
    counts: np.ndarray
    normalized: np.ndarray
    singles: tuple
    duration_s: float


def _check_pair_inputs(streams, bin_ps, max_tau_ps):
    for s in streams:
        if s.n == 0:
            raise EmptyStreamError(f"channel {s.channel} has no tags")
    durations = {s.duration_ps for s in streams}
    if len(durations) > 1:
        raise ParameterError("streams must share a duration")
    if bin_ps < 1:
        raise ParameterError("bin_ps must be a positive integer")
    if max_tau_ps < bin_ps:
        raise ParameterError("max_tau_ps must be at least one bin")


def _chunk_bounds(n, n_chunks):
    return np.linspace(0, n, n_chunks + 1).astype(np.int64)


def g2_histogram(a: TimeTagStream, b: TimeTagStream, bin_ps: int = DEFAULT_BIN_PS,
                 max_tau_ps: int = 100 * DEFAULT_BIN_PS,
                 n_chunks: int = 1) -> CorrelationHistogram:
    """Normalized delay histogram g2(tau) between two channels.

    Delays b - a are collected into centered bins of width bin_ps out to
    +-max_tau_ps.  The accidental level is R_a * R_b * bin * duration.
    Chunking splits the sweep over the first stream (with a windowed
    slice of the second) without changing any count.
    """
    _check_pair_inputs((a, b), bin_ps, max_tau_ps)
    n_half = int(max_tau_ps // bin_ps)
    window = n_half * bin_ps + bin_ps
    counts = np.zeros(2 * n_half + 1, dtype=np.int64)
    bounds = _chunk_bounds(a.n, max(1, n_chunks))
    for s, e in zip(bounds[:-1], bounds[1:]):
        if s == e:
            continue
        chunk = a.tags[s:e]
        b_lo = int(np.searchsorted(b.tags, chunk[0] - window))
        b_hi = int(np.searchsorted(b.tags, chunk[-1] + window))
        counts += _kernels.pair_hist(chunk, b.tags[b_lo:b_hi], bin_ps, n_half)
    duration_s = a.duration_s
    rates = (a.rate, b.rate)
    accidental = rates[0] * rates[1] * (bin_ps / PS_PER_S) * duration_s
    axis = np.arange(-n_half, n_half + 1, dtype=np.int64) * bin_ps
    return CorrelationHistogram(
        order=2, bin_ps=bin_ps, axes=(axis,), counts=counts,
        normalized=counts / accidental, singles=rates, duration_s=duration_s,
    )


def g3_surface(a: TimeTagStream, b: TimeTagStream, c: TimeTagStream,
               bin_ps: int = DEFAULT_BIN_PS,
               max_tau_ps: int = 30 * DEFAULT_BIN_PS,
               n_chunks: int = 1) -> CorrelationHistogram:
    """Normalized third-order delay surface g3(tau1, tau2).

    tau1 = b - a and tau2 = c - a; the accidental level is
    R_a R_b R_c bin^2 duration.
    """
    _check_pair_inputs((a, b, c), bin_ps, max_tau_ps)
    n_half = int(max_tau_ps // bin_ps)
    window = n_half * bin_ps + bin_ps
    nbin = 2 * n_half + 1
    counts = np.zeros((nbin, nbin), dtype=np.int64)
    bounds = _chunk_bounds(a.n, max(1, n_chunks))
    for s, e in zip(bounds[:-1], bounds[1:]):
        if s == e:
            continue
        chunk = a.tags[s:e]
        b_lo = int(np.searchsorted(b.tags, chunk[0] - window))
        b_hi = int(np.searchsorted(b.tags, chunk[-1] + window))
        c_lo = int(np.searchsorted(c.tags, chunk[0] - window))
        c_hi = int(np.searchsorted(c.tags, chunk[-1] + window))
        counts += _kernels.triple_hist(chunk, b.tags[b_lo:b_hi],
                                       c.tags[c_lo:c_hi], bin_ps, n_half)
    duration_s = a.duration_s
    rates = (a.rate, b.rate, c.rate)
    accidental = (rates[0] * rates[1] * rates[2]
                  * (bin_ps / PS_PER_S) ** 2 * duration_s)
    axis = np.arange(-n_half, n_half + 1, dtype=np.int64) * bin_ps
    return CorrelationHistogram(
        order=3, bin_ps=bin_ps, axes=(axis, axis), counts=counts,
        normalized=counts / accidental, singles=rates, duration_s=duration_s,
    )


def nfold_coincidences(streams, bin_ps):
    """Same-bin coincidences across n streams on an absolute time grid.

    Returns (coincidences, accidental): the sum over bins of the product
    of per-channel counts, and the level expected for independent
    streams, prod(R_i) * bin^(n-1) * duration.
    """
    if len(streams) < 2:
        raise ParameterError("need at least two streams")
    _check_pair_inputs(streams, bin_ps, bin_ps)
    bins, prod = np.unique(streams[0].tags // bin_ps, return_counts=True)
    prod = prod.astype(np.float64)
    for s in streams[1:]:
        b2, c2 = np.unique(s.tags // bin_ps, return_counts=True)
        bins, ia, ib = np.intersect1d(bins, b2, assume_unique=True,
                                      return_indices=True)
        prod = prod[ia] * c2[ib]
    coincidences = float(prod.sum())
    duration_s = streams[0].duration_s
    accidental = duration_s * (bin_ps / PS_PER_S) ** (len(streams) - 1)
    for s in streams:
        accidental *= s.rate
    return coincidences, accidental


def gn_zero(streams, bin_ps) -> float:
    """Zero-delay n-th-order correlation of n split streams."""
    coincidences, accidental = nfold_coincidences(streams, bin_ps)
    if coincidences == 0:
        raise InsufficientDataError(
            "no n-fold coincidences in the record; extend the duration "
            "or widen the bins"
        )
    return coincidences / accidental


def gn_zero_stderr(streams, bin_ps):
    """gn_zero with its Poisson standard error: (value, stderr)."""
    coincidences, accidental = nfold_coincidences(streams, bin_ps)
    if coincidences == 0:
        raise InsufficientDataError(
            "no n-fold coincidences in the record; extend the duration "
            "or widen the bins"
        )
    return coincidences / accidental, math.sqrt(coincidences) / accidental


def _suppression_integrals(eff: EfficiencyCurve, mean_R: float, n: int,
                           rtol: float):
    """Converged (numerator, denominator-base) of the suppression ratio."""
    x_lo_rate = QUAD_X_LO * mean_R
    x_hi_rate = QUAD_X_HI * mean_R
    if (x_lo_rate < eff.R[0] * (1 - 1e-9)
            or x_hi_rate > eff.R[-1] * (1 + 1e-9)):
        raise CoverageError(
            f"suppression integral needs efficiency coverage over "
            f"[{x_lo_rate:.3g}, {x_hi_rate:.3g}]/s; curve spans "
            f"[{eff.R[0]:.3g}, {eff.R[-1]:.3g}]/s"
        )
    prev = None
    m = 4096
    while m <= (1 << 22):
        x = np.geomspace(QUAD_X_LO, QUAD_X_HI, m)
        eps = eff.epsilon_at(np.clip(x * mean_R, eff.R[0], eff.R[-1]))
        weight = np.exp(-x)
        den = np.trapezoid(eps * x * weight, x)
        num = np.trapezoid((eps * x) ** n * weight, x)
        if prev is not None:
            if (abs(num - prev[0]) <= rtol * abs(num)
                    and abs(den - prev[1]) <= rtol * abs(den)):
                return num, den
        prev = (num, den)
        m *= 2
    raise NumericalError(
        f"suppression integral did not converge to rtol = {rtol:g}"
    )


def predict_gn_zero(eff: EfficiencyCurve, mean_R: float, n: int,
                    rtol: float = 1e-5) -> float:
    """Expected zero-delay g_n of thermal light through a saturating
    detector, for mean incident rate mean_R.

    The efficiency curve must cover [1e-4, 20] times mean_R; the
    trapezoidal quadrature on a geometric grid is refined until both
    integrals move by less than rtol.
    """
    if n < 1:
        raise ParameterError("order n must be at least 1")
    if mean_R <= 0:
        raise ParameterError("mean_R must be positive")
    num, den = _suppression_integrals(eff, mean_R, n, rtol)
    return float(num / den ** n)


def analytic_gn_ideal(n: int) -> float:
    """Zero-delay g_n of thermal light with no saturation: n factorial."""
    if n < 1:
        raise ParameterError("order n must be at least 1")
    return float(math.factorial(n))


def predict_registered_rate(eff: EfficiencyCurve, mean_R: float,
                            rtol: float = 1e-5) -> float:
    """Mean registered rate for thermal light of mean incident rate mean_R."""
    if mean_R <= 0:
        raise ParameterError("mean_R must be positive")
    _, den = _suppression_integrals(eff, mean_R, 1, rtol)
    return float(mean_R * den)


def incident_for_registered(eff: EfficiencyCurve, target: float,
                            rtol: float = 1e-5) -> float:
    """Invert predict_registered_rate: mean incident rate that yields a
    target mean registered rate for thermal light."""
    if target <= 0:
        raise ParameterError("target rate must be positive")
    lo = eff.R[0] / QUAD_X_LO * 1.001
    hi = eff.R[-1] / QUAD_X_HI * 0.999
    if lo >= hi:
        raise CoverageError("efficiency curve spans too little to invert")
    f = lambda r: predict_registered_rate(eff, r, rtol) - target
    f_lo, f_hi = f(lo), f(hi)
    if f_lo > 0 or f_hi < 0:
        raise CoverageError(
            f"target rate {target:.3g}/s outside the invertible range "
            f"[{target + f_lo:.3g}, {target + f_hi:.3g}]/s"
        )
    return float(optimize.brentq(f, lo, hi, rtol=1e-10))
