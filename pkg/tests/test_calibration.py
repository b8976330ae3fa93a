"""Interarrival histogramming, tail fitting, recovery-curve extraction."""
import numpy as np
import pytest

from tercorr.calibration import (
    calibrate_ter,
    fit_exponential_tail,
    waiting_time_histogram,
)
from tercorr.detector import (
    DetectorConfig,
    detect,
    eta_at,
    half_recovery_time,
    heaviside_ter,
)
from tercorr.errors import (
    InsufficientDataError,
    PoorFitError,
    WindowEmptyError,
)
from tercorr.sources import PS_PER_S, sample_poisson_stream
from tercorr.wtd import WaitingTimeDistribution

from conftest import make_stream

T_D = 43e-9


def test_histogram_hand_example():
    stream = make_stream([0, 100, 300], 1000)
    wtd = waiting_time_histogram(stream, bin_ps=100)
    # gaps 100 and 300-100=200 land in the second and third bins
    np.testing.assert_array_equal(wtd.omega[:3], [0, 1, 1])
    assert wtd.omega.sum() == 2
    assert wtd.dt_ps == 100
    assert wtd.origin == "empirical"


def test_histogram_needs_two_tags():
    with pytest.raises(InsufficientDataError):
        waiting_time_histogram(make_stream([5], 1000), bin_ps=100)


def test_histogram_tail_recovers_poisson_rate():
    rate = 1e4
    stream = sample_poisson_stream(rate, 200.0, seed=3)
    wtd = waiting_time_histogram(stream, bin_ps=20_000)
    fit = fit_exponential_tail(wtd, t_min=0.0)
    assert abs(fit.rate / rate - 1.0) < 0.01
    assert fit.residual < 0.05


def test_histogram_empty_below_dead_time():
    stream = sample_poisson_stream(1e6, 5.0, seed=5)
    out = detect(stream, DetectorConfig(ter=heaviside_ter(T_D)), seed=6)
    wtd = waiting_time_histogram(out, bin_ps=200)
    blind = int(T_D * PS_PER_S) // 200
    assert wtd.omega[:blind].sum() == 0
    assert wtd.omega[blind:].sum() > 0


def test_tail_fit_exact_exponential():
    rate = 2e5
    bin_ps = 200
    centers = (np.arange(2000) + 0.5) * bin_ps / PS_PER_S
    counts = 1e6 * np.exp(-rate * centers)
    wtd = WaitingTimeDistribution(bin_ps, counts, origin="empirical")
    fit = fit_exponential_tail(wtd, t_min=0.0)
    assert abs(fit.rate / rate - 1.0) < 1e-3
    assert fit.residual < 1e-6


def test_tail_fit_empty_window():
    counts = np.zeros(100)
    counts[:5] = 1000.0
    wtd = WaitingTimeDistribution(100, counts, origin="empirical")
    with pytest.raises(WindowEmptyError):
        fit_exponential_tail(wtd, t_min=5e-7)


def test_tail_fit_flags_non_exponential():
    rate = 2e5
    ts = (np.arange(3000) + 0.5) * 200 / PS_PER_S
    counts = 1e6 * np.exp(-rate * ts) * (1.0 + 0.4 * np.sin(2e7 * ts))
    wtd = WaitingTimeDistribution(200, counts, origin="empirical")
    with pytest.raises(PoorFitError):
        fit_exponential_tail(wtd, t_min=0.0)


def test_extract_flat_detector_recovers_unity():
    stream = sample_poisson_stream(2e5, 100.0, seed=7)
    curve, wtd, fit = calibrate_ter(stream, bin_ps=1000)
    early = curve.dt_ps <= int(200e-9 * PS_PER_S)
    assert early.sum() > 100
    assert np.max(np.abs(curve.eta[early] - 1.0)) <= 0.03
    # clamping at 1 pulls the noisy far-tail average slightly below unity
    assert abs(curve.eta_inf - 1.0) < 0.03
    assert abs(fit.rate / 2e5 - 1.0) < 0.01


def test_extract_step_recovery_half_time():
    stream = sample_poisson_stream(2e5, 30.0, seed=9)
    out = detect(stream, DetectorConfig(ter=heaviside_ter(T_D)), seed=10)
    curve, _, _ = calibrate_ter(out, bin_ps=200)
    assert abs(half_recovery_time(curve) - T_D) <= 200e-12
    # dead window reads as zero efficiency
    assert np.all(curve.eta[curve.dt_ps < 40_000] < 0.1)


def test_extract_warns_when_rate_comparable_to_recovery():
    from tercorr.detector import default_snspd_ter

    stream = sample_poisson_stream(3e6, 4.0, seed=11)
    out = detect(stream, DetectorConfig(ter=default_snspd_ter()), seed=12)
    with pytest.warns(UserWarning):
        calibrate_ter(out, bin_ps=200)


def test_calibrate_needs_populated_tail():
    # a single interarrival gap never clears the min-counts cut
    with pytest.raises(WindowEmptyError):
        calibrate_ter(make_stream([0, 1000], 10_000), bin_ps=100)
