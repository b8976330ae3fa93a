"""Source models: pair-correlation shapes, generators, splitting physics."""
import numpy as np
import pytest
from scipy import stats

from tercorr.errors import (
    CapacityError,
    GridTooCoarseError,
    InfeasibleRateError,
    ParameterError,
)
from tercorr.experiments import simulate_split_streams
from tercorr.sources import (
    PS_PER_S,
    SourceKind,
    SourceModel,
    g2_model,
    merge_streams,
    sample_antibunched_stream,
    sample_doubly_stochastic_stream,
    sample_poisson_stream,
    sample_thermal_intensity,
)

T_D = 43e-9


def test_g2_model_poisson_flat():
    model = SourceModel(SourceKind.POISSONIAN, 1e6)
    tau = np.linspace(-1e-6, 1e-6, 11)
    assert np.all(g2_model(model, tau) == 1.0)


def test_g2_model_thermal_values():
    model = SourceModel(SourceKind.THERMAL_BUNCHED, 1e6, 1e-7)
    assert g2_model(model, 0.0) == pytest.approx(2.0)
    # gaussian bunching profile: half-decay of the excess at tau = T
    assert g2_model(model, 1e-7) == pytest.approx(1.5)
    assert g2_model(model, -1e-7) == pytest.approx(1.5)
    assert g2_model(model, 1e-5) == pytest.approx(1.0)


def test_g2_model_antibunched_values():
    model = SourceModel(SourceKind.TWO_LEVEL_ANTIBUNCHED, 1e6, 1e-7)
    assert g2_model(model, 0.0) == pytest.approx(0.0)
    assert g2_model(model, 1e-7) == pytest.approx(1.0 - np.exp(-1.0))
    assert g2_model(model, -1e-7) == pytest.approx(1.0 - np.exp(-1.0))
    assert g2_model(model, 1e-5) == pytest.approx(1.0)


def test_source_model_validation():
    with pytest.raises(ParameterError):
        SourceModel(SourceKind.POISSONIAN, 0.0)
    with pytest.raises(ParameterError):
        SourceModel(SourceKind.THERMAL_BUNCHED, 1e6, 0.0)
    # a fast antibunched source may exceed the generator feasibility limit
    # at the model level (the solver can still evaluate it)
    SourceModel(SourceKind.TWO_LEVEL_ANTIBUNCHED, 1e8, 1e-7)


def test_poisson_zero_duration_rejected():
    with pytest.raises(ParameterError):
        sample_poisson_stream(1e6, 0.0, seed=1)


def test_poisson_count_within_3_sigma():
    stream = sample_poisson_stream(1e6, 10.0, seed=1)
    expected = 1e7
    assert abs(stream.n - expected) <= 3 * np.sqrt(expected)
    assert stream.duration_ps == int(10.0 * PS_PER_S)
    assert np.all(np.diff(stream.tags) > 0)


def test_poisson_deterministic_given_seed():
    a = sample_poisson_stream(1e5, 1.0, seed=42)
    b = sample_poisson_stream(1e5, 1.0, seed=42)
    c = sample_poisson_stream(1e5, 1.0, seed=43)
    np.testing.assert_array_equal(a.tags, b.tags)
    assert a.n != c.n or not np.array_equal(a.tags, c.tags)


def test_poisson_capacity_guard_before_allocation():
    with pytest.raises(CapacityError):
        sample_poisson_stream(1e9, 10.0, seed=0)


def test_poisson_interarrival_exponential():
    rate = 1e6
    stream = sample_poisson_stream(rate, 2.0, seed=7)
    gaps = np.diff(stream.tags) / PS_PER_S
    d, _ = stats.kstest(gaps, "expon", args=(0, 1.0 / rate))
    assert d < 0.002


def test_stream_validation():
    from tercorr.sources import TimeTagStream

    with pytest.raises(ParameterError):
        TimeTagStream(0, np.array([5, 4], dtype=np.int64), 10)
    with pytest.raises(ParameterError):
        TimeTagStream(0, np.array([-1, 4], dtype=np.int64), 10)
    with pytest.raises(ParameterError):
        TimeTagStream(0, np.array([4, 20], dtype=np.int64), 10)


def test_thermal_grid_coarser_than_tenth_of_T_rejected():
    with pytest.raises(GridTooCoarseError):
        sample_thermal_intensity(1e6, 1e-6, 1e-3, grid_dt=2e-7, seed=0)


def test_thermal_trace_statistics():
    mean_rate, T = 1e6, 1e-6
    duration = 0.1  # 1e5 coherence times
    trace = sample_thermal_intensity(mean_rate, T, duration, grid_dt=T / 10,
                                     seed=3)
    vals = trace.values
    assert abs(vals.mean() / mean_rate - 1.0) < 0.02
    g2_zero = np.mean(vals**2) / np.mean(vals) ** 2
    assert abs(g2_zero - 2.0) < 0.05
    # negative-exponential marginal of the intensity
    d, _ = stats.kstest(vals, "expon", args=(0, mean_rate))
    assert d < 0.02


def test_thermal_trace_autocorrelation_profile():
    mean_rate, T = 1e6, 1e-6
    trace = sample_thermal_intensity(mean_rate, T, 0.1, grid_dt=T / 10,
                                     seed=5)
    vals = trace.values
    mean_sq = vals.mean() ** 2
    for lag_bins, tau in ((5, T / 2), (10, T), (20, 2 * T)):
        emp = np.mean(vals[:-lag_bins] * vals[lag_bins:]) / mean_sq
        expected = 1.0 + np.exp(-np.log(2.0) * (tau / T) ** 2)
        assert abs(emp - expected) < 0.05


def test_doubly_stochastic_constant_trace_is_poisson():
    from tercorr.sources import IntensityTrace

    rate, duration = 1e6, 1.0
    n_cells = 1000
    trace = IntensityTrace(
        dt_ps=int(duration / n_cells * PS_PER_S),
        values=np.full(n_cells, rate),
    )
    stream = sample_doubly_stochastic_stream(trace, seed=11)
    assert abs(stream.n - rate * duration) <= 3 * np.sqrt(rate * duration)
    gaps = np.diff(stream.tags) / PS_PER_S
    d, _ = stats.kstest(gaps, "expon", args=(0, 1.0 / rate))
    assert d < 0.005


def test_doubly_stochastic_zero_trace_is_empty():
    from tercorr.sources import IntensityTrace

    trace = IntensityTrace(dt_ps=int(1e6), values=np.zeros(100))
    stream = sample_doubly_stochastic_stream(trace, seed=0)
    assert stream.n == 0


def test_antibunched_rate_and_feasibility():
    rate, T = 2e5, 1e-6
    stream = sample_antibunched_stream(rate, T, 20.0, seed=9)
    assert abs(stream.rate / rate - 1.0) < 0.02
    with pytest.raises(InfeasibleRateError):
        sample_antibunched_stream(2e6, 1e-6, 1.0, seed=0)
    assert sample_antibunched_stream(0.0, 1e-6, 1.0, seed=0).n == 0


def test_antibunched_short_gap_suppression():
    rate, T = 2e5, 1e-6
    stream = sample_antibunched_stream(rate, T, 20.0, seed=9)
    gaps = np.diff(stream.tags)
    frac_short = np.mean(gaps < T / 10 * PS_PER_S)
    # memoryless reference at the same rate
    poisson_frac = 1.0 - np.exp(-rate * T / 10)
    assert frac_short < 0.2 * poisson_frac


def test_antibunched_pair_correlation_recovers():
    from tercorr.correlator import g2_histogram
    from tercorr.detector import split_stream

    rate, T = 2e5, 1e-6
    stream = sample_antibunched_stream(rate, T, 80.0, seed=21)
    a, b = split_stream(stream, 2, seed=22)
    bin_ps = int(T / 20 * PS_PER_S)
    hist = g2_histogram(a, b, bin_ps=bin_ps, max_tau_ps=bin_ps * 200)
    center = hist.normalized[hist.normalized.size // 2]
    assert center <= 0.05
    tail = np.abs(hist.axes[0]) > 5 * T * PS_PER_S
    assert abs(hist.normalized[tail].mean() - 1.0) < 0.05
    # dip fills in monotonically (within counting noise) out to 3T
    half = hist.normalized.size // 2
    fold = 0.5 * (hist.normalized[half:half + 60]
                  + hist.normalized[half::-1][:60])
    sigma = 1.0 / np.sqrt(np.maximum(hist.counts[half:half + 60], 1))
    assert np.all(np.diff(fold) > -4 * (sigma[1:] + sigma[:-1]))


def test_segmented_generation_concatenates_exactly():
    model = SourceModel(SourceKind.POISSONIAN, 1e6)
    whole = simulate_split_streams(model, 1, 50.0, seed=17)[0]
    pieces = simulate_split_streams(model, 1, 50.0, seed=17, segment_s=10.0)[0]
    assert whole.duration_ps == pieces.duration_ps
    assert abs(pieces.n - 5e7) <= 3 * np.sqrt(5e7)
    assert np.all(np.diff(pieces.tags) > 0)


def test_segmented_thermal_deterministic():
    model = SourceModel(SourceKind.THERMAL_BUNCHED, 1e5, 1e-4)
    a = simulate_split_streams(model, 1, 30.0, seed=23, segment_s=5.0)[0]
    b = simulate_split_streams(model, 1, 30.0, seed=23, segment_s=5.0)[0]
    np.testing.assert_array_equal(a.tags, b.tags)
    assert np.all(np.diff(a.tags) > 0)
    assert abs(a.rate / 1e5 - 1.0) < 0.05


def test_merge_streams_restores_split():
    stream = sample_poisson_stream(1e6, 1.0, seed=31)
    from tercorr.detector import split_stream

    parts = split_stream(stream, 3, seed=32)
    merged = merge_streams(parts)
    np.testing.assert_array_equal(merged.tags, stream.tags)
