"""Detector-array mitigation: analytic scaling and summed-pair estimates."""
import numpy as np
import pytest

from tercorr.array_analysis import (
    array_g2_sweep,
    coincidence_rate_scaling,
    optimal_detector_count,
    summed_pair_g2,
)
from tercorr.correlator import gn_zero, nfold_coincidences
from tercorr.detector import constant_ter, heaviside_ter, split_stream
from tercorr.errors import ParameterError
from tercorr.sources import (
    PS_PER_S,
    SourceKind,
    SourceModel,
    sample_poisson_stream,
)
from tercorr.wtd import poisson_step_curve

T_D = 43e-9


def _unit_eff():
    R = np.geomspace(1.0, 1e12, 101)
    from tercorr.wtd import EfficiencyCurve

    return EfficiencyCurve(R, R)


def test_scaling_ideal_pair_closed_form():
    eff = _unit_eff()
    R = 1e6
    value = coincidence_rate_scaling(2, 2, R, eff)
    assert value == pytest.approx(R**2 / 4.0)
    assert coincidence_rate_scaling(2, 2, R, eff, mode="subsets") == \
        pytest.approx(R**2 / 4.0)


def test_scaling_equal_split_prefactor_is_unity():
    eff = _unit_eff()
    R = 1e6
    for mode in ("factorial_ratio", "subsets"):
        value = coincidence_rate_scaling(4, 4, R, eff, mode=mode)
        assert value == pytest.approx((R / 4.0) ** 4)


def test_scaling_grows_with_detector_count_under_saturation():
    eff = poisson_step_curve(T_D, np.geomspace(1.0, 1e12, 2001))
    R = 2.0 / T_D
    for mode in ("factorial_ratio", "subsets"):
        values = [coincidence_rate_scaling(m, 2, R, eff, mode=mode)
                  for m in (2, 3, 4, 6, 8, 12, 16)]
        assert np.all(np.diff(values) > 0)


def test_scaling_validation():
    eff = _unit_eff()
    with pytest.raises(ParameterError):
        coincidence_rate_scaling(2, 1, 1e6, eff)
    with pytest.raises(ParameterError):
        coincidence_rate_scaling(2, 3, 1e6, eff)
    with pytest.raises(ParameterError):
        coincidence_rate_scaling(2, 2, 0.0, eff)
    with pytest.raises(ParameterError):
        coincidence_rate_scaling(4, 2, 1e6, eff, mode="bogus")


def test_optimal_count_saturates_at_cap_when_growth_is_monotone():
    eff = poisson_step_curve(T_D, np.geomspace(1.0, 1e12, 2001))
    assert optimal_detector_count(2, 2.0 / T_D, eff, m_max=32) == 32


def test_summed_pair_reduces_to_single_pair_at_m2():
    stream = sample_poisson_stream(2e5, 5.0, seed=51)
    parts = split_stream(stream, 2, seed=52)
    bin_ps = 100_000
    g2_pool, stderr, coinc = summed_pair_g2(parts, bin_ps)
    assert g2_pool == pytest.approx(gn_zero(parts, bin_ps))
    assert coinc > 0 and stderr > 0


def test_summed_pair_pools_all_unordered_pairs():
    stream = sample_poisson_stream(3e5, 5.0, seed=53)
    parts = split_stream(stream, 3, seed=54)
    bin_ps = 100_000
    g2_pool, _, coinc = summed_pair_g2(parts, bin_ps)
    total_c = total_a = 0.0
    for i in range(3):
        for j in range(i + 1, 3):
            c, a = nfold_coincidences([parts[i], parts[j]], bin_ps)
            total_c += c
            total_a += a
    assert coinc == total_c
    assert g2_pool == pytest.approx(total_c / total_a)


def test_array_sweep_low_rate_thermal_reads_true_bunching():
    model = SourceModel(SourceKind.THERMAL_BUNCHED, 4e4, 1e-4)
    sweep = array_g2_sweep(model, heaviside_ter(T_D), [2], 20.0, seed=55)
    assert abs(sweep.g2[0] - 2.0) < 0.05
    assert sweep.stderr[0] < 0.02


def test_array_sweep_flat_detector_is_m_independent():
    model = SourceModel(SourceKind.THERMAL_BUNCHED, 2e5, 1e-4)
    sweep = array_g2_sweep(model, constant_ter(1.0), [2, 4], 10.0, seed=57)
    assert abs(sweep.g2[0] - sweep.g2[1]) < 0.08
    assert abs(sweep.g2[0] - 2.0) < 0.1


def test_array_sweep_validation():
    model = SourceModel(SourceKind.THERMAL_BUNCHED, 1e5, 1e-4)
    with pytest.raises(ParameterError):
        array_g2_sweep(model, heaviside_ter(T_D), [1, 2], 1.0, seed=0)
    anti = SourceModel(SourceKind.TWO_LEVEL_ANTIBUNCHED, 1e5, 1e-7)
    with pytest.raises(ParameterError):
        array_g2_sweep(anti, heaviside_ter(T_D), [2], 1.0, seed=0)
