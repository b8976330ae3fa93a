"""Recovery curves, the sequential thinning pass, and stream splitting."""
import numpy as np
import pytest

from tercorr.detector import (
    DetectorConfig,
    constant_ter,
    default_snspd_ter,
    detect,
    eta_at,
    half_recovery_time,
    heaviside_ter,
    split_stream,
    tabulated_ter,
)
from tercorr.errors import ParameterError
from tercorr.sources import PS_PER_S, sample_poisson_stream

from conftest import make_stream

T_D = 43e-9
T_D_PS = 43_000


def test_heaviside_eta_closed_interval():
    ter = heaviside_ter(T_D)
    assert eta_at(ter, 42e-9) == 0.0
    assert eta_at(ter, 43e-9) == 1.0
    assert eta_at(ter, 1e-6) == 1.0
    np.testing.assert_array_equal(
        eta_at(ter, np.array([0.0, 42.8e-9, 43e-9])), [0.0, 0.0, 1.0])


def test_heaviside_validation():
    with pytest.raises(ParameterError):
        heaviside_ter(0.0)
    with pytest.raises(ParameterError):
        # below the 1 ps tag resolution
        heaviside_ter(1e-13)


def test_tabulated_interpolation_midpoint():
    ter = tabulated_ter(np.array([0, 1000], dtype=np.int64),
                        np.array([0.2, 0.4]), eta_inf=0.4)
    assert eta_at(ter, 500e-12) == pytest.approx(0.3)
    assert eta_at(ter, 0.0) == pytest.approx(0.2)
    # beyond the table the curve holds at the recovered efficiency
    assert eta_at(ter, 1e-6) == pytest.approx(0.4)


def test_tabulated_default_recovered_efficiency():
    grid = np.arange(0, 10_000, 100, dtype=np.int64)
    eta = np.linspace(0.0, 0.8, grid.size)
    ter = tabulated_ter(grid, eta)
    # default estimate: mean over the last tenth of the table
    tail = eta[int(np.ceil(0.9 * grid.size)):]
    assert ter.eta_inf == pytest.approx(tail.mean())


def test_tabulated_validation():
    # out-of-range samples are clipped into [0, 1], not rejected
    ter = tabulated_ter(np.array([0, 100]), np.array([-0.5, 1.5]))
    np.testing.assert_array_equal(ter.eta, [0.0, 1.0])
    with pytest.raises(ParameterError):
        tabulated_ter(np.array([100, 0]), np.array([0.5, 0.5]))
    with pytest.raises(ParameterError):
        tabulated_ter(np.array([-100, 0]), np.array([0.5, 0.5]))
    with pytest.raises(ParameterError):
        tabulated_ter(np.array([0]), np.array([0.5]))
    with pytest.raises(ParameterError):
        constant_ter(0.0)
    with pytest.raises(ParameterError):
        constant_ter(1.2)


def test_default_smooth_curve_shape():
    ter = default_snspd_ter()
    assert eta_at(ter, 0.0) == 0.0
    assert eta_at(ter, 43e-9) == pytest.approx(0.5)
    assert half_recovery_time(ter) == pytest.approx(43e-9, abs=2e-10)
    assert np.all(np.diff(ter.eta) >= 0)
    assert ter.dt_ps[1] - ter.dt_ps[0] == 200


def test_detect_empty_stream():
    stream = make_stream([], 1000)
    out = detect(stream, DetectorConfig(ter=heaviside_ter(T_D)), seed=0)
    assert out.n == 0
    assert out.duration_ps == 1000


def test_detect_drops_second_tag_inside_dead_window():
    stream = make_stream([0, 20_000], 100_000)
    out = detect(stream, DetectorConfig(ter=heaviside_ter(T_D)), seed=0)
    np.testing.assert_array_equal(out.tags, [0])


def test_detect_is_identity_for_unit_flat_efficiency():
    stream = sample_poisson_stream(1e6, 0.5, seed=3)
    out = detect(stream, DetectorConfig(ter=constant_ter(1.0)), seed=1)
    np.testing.assert_array_equal(out.tags, stream.tags)


def test_detect_subsequence_and_dead_gap():
    t_d = 100e-9
    stream = sample_poisson_stream(1e7, 0.2, seed=5)
    out = detect(stream, DetectorConfig(ter=heaviside_ter(t_d)), seed=6)
    assert np.all(np.isin(out.tags, stream.tags))
    assert np.min(np.diff(out.tags)) >= int(t_d * PS_PER_S)
    eps = out.n / stream.n
    assert abs(eps / 0.5 - 1.0) < 0.01  # closed-form efficiency at R*t_d = 1


def test_detect_registered_rate_capped_by_dead_time():
    t_d_ps = int(T_D * PS_PER_S)
    for x in (2.0, 5.0):
        rate = x / T_D
        stream = sample_poisson_stream(rate, 2e6 / rate, seed=int(x))
        out = detect(stream, DetectorConfig(ter=heaviside_ter(T_D)), seed=9)
        assert np.min(np.diff(out.tags)) >= t_d_ps
        assert out.rate <= 1.0 / T_D


def test_detect_intrinsic_efficiency_thins_binomially():
    stream = sample_poisson_stream(1e6, 1.0, seed=11)
    q = 0.37
    out = detect(stream, DetectorConfig(ter=constant_ter(1.0),
                                        intrinsic_efficiency=q), seed=12)
    expected = q * stream.n
    assert abs(out.n - expected) <= 3 * np.sqrt(stream.n * q * (1 - q))


def test_detect_first_tag_sees_idle_detector():
    out = detect(make_stream([5], 1000), DetectorConfig(ter=heaviside_ter(T_D)),
                 seed=0)
    np.testing.assert_array_equal(out.tags, [5])


def test_detect_deterministic_and_chunk_independent():
    stream = sample_poisson_stream(2e6, 0.5, seed=13)
    config = DetectorConfig(ter=default_snspd_ter(), intrinsic_efficiency=0.8)
    a = detect(stream, config, seed=14)
    b = detect(stream, config, seed=14)
    np.testing.assert_array_equal(a.tags, b.tags)
    # carried recovery state makes the scan chunk-size invariant
    c = detect(stream, config, seed=14, chunk_size=1000)
    np.testing.assert_array_equal(a.tags, c.tags)
    d = detect(stream, config, seed=15)
    assert not np.array_equal(a.tags, d.tags)


def test_detect_missed_photons_do_not_restart_recovery():
    # tag 2 falls in the dead window and is missed with certainty; tag 3 is
    # 60 ns after the last ACCEPTED tag, so it must be kept.  A detector
    # that (wrongly) restarted its clock on the missed photon would see
    # only 30 ns of recovery and drop it too.
    tags = np.array([0, 30_000, 60_000], dtype=np.int64)
    out = detect(make_stream(tags, 100_000),
                 DetectorConfig(ter=heaviside_ter(T_D)), seed=2)
    np.testing.assert_array_equal(out.tags, [0, 60_000])


def test_split_single_output_is_copy():
    stream = sample_poisson_stream(1e5, 0.1, seed=17)
    (out,) = split_stream(stream, 1, seed=18)
    np.testing.assert_array_equal(out.tags, stream.tags)


def test_split_conserves_and_routes_binomially():
    stream = sample_poisson_stream(1e6, 1.0, seed=19)
    parts = split_stream(stream, 4, seed=20)
    assert sum(p.n for p in parts) == stream.n
    assert sorted(p.channel for p in parts) == [0, 1, 2, 3]
    merged = np.sort(np.concatenate([p.tags for p in parts]))
    np.testing.assert_array_equal(merged, stream.tags)
    n, p = stream.n, 0.25
    for part in parts:
        assert abs(part.n - n * p) <= 3 * np.sqrt(n * p * (1 - p))


def test_split_validation():
    stream = sample_poisson_stream(1e5, 0.1, seed=21)
    with pytest.raises(ParameterError):
        split_stream(stream, 0, seed=0)


def test_split_halves_are_uncorrelated():
    from tercorr.correlator import g2_histogram

    stream = sample_poisson_stream(2e5, 10.0, seed=23)
    a, b = split_stream(stream, 2, seed=24)
    bin_ps = 40_000_000  # 40 us
    hist = g2_histogram(a, b, bin_ps=bin_ps, max_tau_ps=5 * bin_ps)
    assert np.all(np.abs(hist.normalized - 1.0) < 0.02)
