"""Recovery-curve calibration from measured interarrival times.

For Poissonian illumination the interarrival-time histogram of a
recovery-free detector is a pure exponential.  Recovery losses carve a
rate-dependent dent into the short-delay side, so dividing the measured
histogram by an exponential fitted to its long-delay tail exposes the
recovery curve eta(dt) directly.  The method needs the registered rate to
be slow compared with the recovery time, otherwise the detector rarely
reaches full recovery between events and the extracted curve is biased; a
warning is emitted when rate * t_half exceeds 5%.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .detector import TERCurve, half_recovery_time, tabulated_ter
from .errors import (
    InsufficientDataError,
    ParameterError,
    PoorFitError,
    WindowEmptyError,
)
from .sources import PS_PER_S, TimeTagStream
from .wtd import WaitingTimeDistribution

#: default histogram bin width, matching a typical tagger resolution
DEFAULT_BIN_PS = 200
#: default moving-average window (bins) for the extracted curve
DEFAULT_SMOOTH_BINS = 5
#: bins with fewer counts than this are excluded from the tail fit
MIN_FIT_COUNTS = 10

RATE_VALIDITY_LIMIT = 0.05


@dataclass
class TailFit:
    """Exponential fit A*exp(-rate*dt) to a histogram tail."""

    rate: float
    amplitude: float
    t_min: float
    t_max: float
    residual: float


def waiting_time_histogram(stream: TimeTagStream,
                           bin_ps: int = DEFAULT_BIN_PS) -> WaitingTimeDistribution:
    """Histogram of consecutive interarrival times, uniform ps bins."""
    if bin_ps < 1:
        raise ParameterError("bin_ps must be a positive integer")
    if stream.n < 2:
        raise InsufficientDataError(
            f"need at least 2 tags for interarrival times, got {stream.n}"
        )
    deltas = np.diff(stream.tags)
    counts = np.bincount(deltas // bin_ps)
    if counts.size < 2:
        counts = np.append(counts, 0)
    return WaitingTimeDistribution(bin_ps, counts.astype(float), "empirical")


def _bin_centers_s(wtd: WaitingTimeDistribution) -> np.ndarray:
    return (np.arange(wtd.omega.size) + 0.5) * (wtd.dt_ps / PS_PER_S)


def fit_exponential_tail(wtd: WaitingTimeDistribution, t_min: float,
                         min_counts: int = MIN_FIT_COUNTS,
                         max_residual: float = 0.05) -> TailFit:
    """Least-squares exponential through the histogram beyond t_min.

    Fits log counts against bin centers over the contiguous run of bins
    beyond t_min that hold at least min_counts events; stopping at the
    first thinner bin (rather than skipping it) avoids selecting upward
    noise fluctuations deep in the tail, which would tilt the slope.
    Bins are weighted by their counts (the efficient weighting for
    log-transformed counting data) and the small-count bias of the log
    transform is corrected to first order.  The reported residual is the
    count-weighted r.m.s. relative deviation from the fitted exponential
    with the expected counting-noise contribution subtracted, so it
    measures systematic mismatch rather than shot noise; it must stay
    below max_residual for the fit to be accepted.
    """
    if wtd.origin != "empirical":
        raise ParameterError("tail fit expects an empirical histogram")
    centers = _bin_centers_s(wtd)
    counts = wtd.omega
    start = int(np.searchsorted(centers, t_min, side="left"))
    thin = np.nonzero(counts[start:] < min_counts)[0]
    stop = start + (int(thin[0]) if thin.size else counts.size - start)
    if stop - start < 2:
        raise WindowEmptyError(
            f"fewer than 2 usable bins beyond t_min = {t_min:.3g} s "
            f"(min_counts = {min_counts})"
        )
    t = centers[start:stop]
    c = counts[start:stop]
    y = np.log(c) + 0.5 / c
    slope, intercept = np.polyfit(t, y, 1, w=np.sqrt(c))
    # re-weight from the fitted trend: weights taken from the data itself
    # correlate with the noise and tilt the slope by O(1/mean-count)
    for _ in range(2):
        w = np.exp(0.5 * np.clip(intercept + slope * t, -600.0, 600.0))
        slope, intercept = np.polyfit(t, y, 1, w=w)
    if slope >= 0:
        raise PoorFitError("histogram tail does not decay")
    rate = -slope
    amplitude = float(np.exp(intercept))
    model = amplitude * np.exp(-rate * t)
    rel = (c - model) / model
    # subtract the per-bin Poisson variance 1/model so a clean exponential
    # scores ~0 no matter how thinly the tail is binned
    excess = float(np.average(rel**2 - 1.0 / model, weights=model))
    residual = float(np.sqrt(max(0.0, excess)))
    if residual > max_residual:
        raise PoorFitError(
            f"relative tail residual {residual:.3g} exceeds {max_residual:g}"
        )
    return TailFit(rate=float(rate), amplitude=amplitude,
                   t_min=float(t[0]), t_max=float(t[-1]), residual=residual)


def _moving_average(values: np.ndarray, window: int) -> np.ndarray:
    if window <= 1:
        return values
    kernel = np.ones(window)
    norm = np.convolve(np.ones_like(values), kernel, mode="same")
    return np.convolve(values, kernel, mode="same") / norm


def extract_ter(wtd: WaitingTimeDistribution, fit: TailFit, smooth: bool = True,
                smooth_bins: int = DEFAULT_SMOOTH_BINS) -> TERCurve:
    """Recovery curve from a histogram and its fitted exponential trend.

    eta(dt) = counts(dt) / (A * exp(-rate*dt)), evaluated at bin centers
    up to the end of the fit window, smoothed by a centered moving
    average and clamped to [0, 1].  The recovered efficiency eta_inf is
    the mean of the (clamped) curve inside the fit window.  Emits a
    warning when rate * t_half > 0.05, where the slow-rate assumption
    behind the division starts to fail.
    """
    if wtd.origin != "empirical":
        raise ParameterError("extract_ter expects an empirical histogram")
    if smooth_bins < 1:
        raise ParameterError("smooth_bins must be at least 1")
    centers = _bin_centers_s(wtd)
    last = int(np.searchsorted(centers, fit.t_max, side="right"))
    if last < 2:
        raise WindowEmptyError("fit window ends before the second bin")
    centers = centers[:last]
    counts = wtd.omega[:last]
    trend = fit.amplitude * np.exp(-fit.rate * centers)
    eta = counts / trend
    if smooth:
        eta = _moving_average(eta, smooth_bins)
    eta = np.clip(eta, 0.0, 1.0)
    in_window = centers >= fit.t_min
    eta_inf = float(eta[in_window].mean())
    grid_ps = np.round(centers * PS_PER_S).astype(np.int64)
    curve = tabulated_ter(grid_ps, eta, eta_inf=eta_inf)
    t_half = half_recovery_time(curve)
    if fit.rate * t_half > RATE_VALIDITY_LIMIT:
        warnings.warn(
            f"registered rate * recovery time = {fit.rate * t_half:.3g} "
            f"exceeds {RATE_VALIDITY_LIMIT}; the extracted curve is biased "
            "low at short delays — recalibrate at a lower rate",
            stacklevel=2,
        )
    return curve


def calibrate_ter(stream: TimeTagStream, bin_ps: int = DEFAULT_BIN_PS,
                  t_min: float | None = None, smooth: bool = True,
                  smooth_bins: int = DEFAULT_SMOOTH_BINS,
                  eta_inf: float | None = None):
    """One-call pipeline: histogram, tail fit, recovery extraction.

    t_min defaults to five times the histogram's peak position; the peak
    sits roughly where the detector has recovered, so a generous multiple
    of it is safely past the recovery region for a slow source.  Returns
    (curve, histogram, fit); pass eta_inf to override the in-window mean.
    """
    wtd = waiting_time_histogram(stream, bin_ps)
    if t_min is None:
        peak = int(np.argmax(wtd.omega))
        t_min = 5.0 * (peak + 0.5) * (bin_ps / PS_PER_S)
    fit = fit_exponential_tail(wtd, t_min)
    curve = extract_ter(wtd, fit, smooth=smooth, smooth_bins=smooth_bins)
    if eta_inf is not None:
        curve = tabulated_ter(curve.dt_ps, curve.eta, eta_inf=eta_inf)
    return curve, wtd, fit
