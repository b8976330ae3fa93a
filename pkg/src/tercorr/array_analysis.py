"""Detector arrays: recovering correlations by dividing the light.

Splitting a bright beam over m detectors sends each one R/m photons, so
every detector sits further from saturation and the measured correlations
climb back toward their ideal values.  The price is a falling n-fold
coincidence rate once m grows past the saturation-limited optimum:

    C(m, n) ~ prefactor * (eps(R/m) * R/m)^n,

where eps is the single-detector saturation curve.  The default
prefactor m!/n! counts ordered assignments of the n coincident photons
onto distinct detectors of the array (appropriate when every detector of
the array participates in the coincidence logic); the alternative
"subsets" mode uses the binomial coefficient C(m, n), counting unordered
choices of which n detectors fire.  Both are exposed because the two
conventions differ by a factor (m-n)! that cancels in any comparison at
fixed m.

The Monte Carlo sweep estimates the zero-delay pair correlation of a
split-and-detected stream by summing coincidence and accidental counts
over all detector pairs before dividing, which keeps the estimator
well-behaved when individual pairs have few counts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .correlator import nfold_coincidences
from .detector import DetectorConfig, TERCurve
from .errors import InsufficientDataError, ParameterError
from .experiments import simulate_detected_channels
from .sources import SourceKind, SourceModel
from .wtd import EfficiencyCurve

SCALING_MODES = ("factorial_ratio", "subsets")


def coincidence_rate_scaling(m: int, n: int, R: float, eff: EfficiencyCurve,
                             mode: str = "factorial_ratio") -> float:
    """Relative n-fold coincidence rate of an m-detector array at total
    incident rate R (arbitrary common units; see module docstring)."""
    if n < 2:
        raise ParameterError("coincidence order n must be at least 2")
    if m < n:
        raise ParameterError("need at least n detectors for an n-fold coincidence")
    if R <= 0:
        raise ParameterError("incident rate must be positive")
    if mode not in SCALING_MODES:
        raise ParameterError(f"mode must be one of {SCALING_MODES}")
    eps = eff.epsilon_at(R / m)
    per_detector = (eps * R / m) ** n
    if mode == "factorial_ratio":
        prefactor = math.factorial(m) / math.factorial(n)
    else:
        prefactor = math.comb(m, n)
    return float(prefactor * per_detector)


def optimal_detector_count(n: int, R: float, eff: EfficiencyCurve,
                           m_max: int = 64,
                           mode: str = "factorial_ratio") -> int:
    """Array size maximizing the n-fold coincidence rate at rate R."""
    best_m, best_c = n, -np.inf
    for m in range(n, m_max + 1):
        try:
            c = coincidence_rate_scaling(m, n, R, eff, mode)
        except Exception:
            continue
        if c > best_c:
            best_m, best_c = m, c
    if not np.isfinite(best_c):
        raise ParameterError(
            f"no array size in [{n}, {m_max}] is evaluable at R = {R:.3g}"
        )
    return best_m


@dataclass
class ArraySweep:
    """Monte Carlo pair-correlation estimates across array sizes."""

    m_values: np.ndarray
    g2: np.ndarray
    stderr: np.ndarray
    pair_rate: np.ndarray
    incident_rate: float
    bin_ps: int
    duration_s: float


def summed_pair_g2(streams, bin_ps):
    """Zero-delay pair correlation pooled over all channel pairs.

    Sums coincidences and accidentals across pairs before dividing;
    returns (g2, poisson stderr, summed coincidence count).
    """
    if len(streams) < 2:
        raise ParameterError("need at least two detected channels")
    c_sum = 0.0
    a_sum = 0.0
    for i in range(len(streams)):
        for j in range(i + 1, len(streams)):
            c, a = nfold_coincidences((streams[i], streams[j]), bin_ps)
            c_sum += c
            a_sum += a
    if c_sum == 0:
        raise InsufficientDataError(
            "no pair coincidences across the array; extend the duration"
        )
    return c_sum / a_sum, math.sqrt(c_sum) / a_sum, c_sum


def array_g2_sweep(model: SourceModel, ter: TERCurve, m_values, duration: float,
                   seed, bin_ps: int | None = None,
                   intrinsic_efficiency: float = 1.0,
                   segment_s: float | None = None) -> ArraySweep:
    """Measured zero-delay pair correlation vs array size.

    For each m the full pipeline runs independently (same root seed,
    per-m spawned children): source at the model's mean rate, m-way
    split, one recovering detector per channel, pooled pair correlation
    at zero delay.  The default bin width is T/10 for correlated sources
    (well inside the correlation peak) and 1 ns for Poissonian light.
    """
    m_values = np.atleast_1d(np.asarray(m_values, dtype=int))
    if np.any(m_values < 2):
        raise ParameterError("array sizes must be at least 2")
    if model.kind is SourceKind.TWO_LEVEL_ANTIBUNCHED:
        raise ParameterError(
            "array sweep targets classical (Poissonian/thermal) sources"
        )
    if bin_ps is None:
        bin_ps = (max(1, int(round(model.T / 10 * 1e12)))
                  if model.T > 0 else 1000)
    config = DetectorConfig(ter=ter, intrinsic_efficiency=intrinsic_efficiency)
    seeds = np.random.SeedSequence(seed).spawn(m_values.size)
    g2 = np.empty(m_values.size)
    err = np.empty(m_values.size)
    pair_rate = np.empty(m_values.size)
    for i, m in enumerate(m_values):
        detected = simulate_detected_channels(model, int(m), config, duration,
                                              seeds[i], segment_s=segment_s)
        g2[i], err[i], c_sum = summed_pair_g2(detected, bin_ps)
        pair_rate[i] = c_sum / duration
    return ArraySweep(m_values=m_values, g2=g2, stderr=err,
                      pair_rate=pair_rate, incident_rate=model.mean_rate,
                      bin_ps=int(bin_ps), duration_s=float(duration))
