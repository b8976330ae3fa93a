"""Canned parameter sweeps behind the `sweep` command.

Each runner writes one or more CSVs plus rendered figures into an output
directory and returns a summary dict (written files, parameters,
per-point failures).  Failures of individual sweep points are collected
rather than raised, so a sweep always produces whatever subset is
computable; the caller decides what to do with the summary.

Four presets cover the standard story: `saturation` (registered vs
incident rate for Poissonian light on a step-recovery detector, analytic
vs solver vs Monte Carlo), `efficiency` (epsilon(R) for all three source
archetypes at two correlation times), `suppression` (predicted
zero-delay correlations vs registered rate for step and measured-shape
recovery curves), and `array` (Monte Carlo pair correlations and
coincidence-rate scaling across detector-array sizes).
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pandas as pd

from . import plots, tagio
from .array_analysis import array_g2_sweep, coincidence_rate_scaling
from .correlator import incident_for_registered, predict_gn_zero, predict_registered_rate
from .detector import DetectorConfig, default_snspd_ter, heaviside_ter
from .errors import NumericalError, ParameterError
from .experiments import simulate_detected_channels
from .sources import SourceKind, SourceModel
from .wtd import EfficiencyCurve, poisson_step_curve, rate_curve

DEFAULT_T_D = 43e-9

PRESETS = ("saturation", "efficiency", "suppression", "array")


def _outdir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _mc_registered_rate(model, config, duration, seed):
    streams = simulate_detected_channels(model, 1, config, duration, seed)
    return streams[0].rate


def run_saturation(output_dir, seed=0, t_d=DEFAULT_T_D, figures=True,
                   duration_scale=1.0):
    """Poissonian saturation: analytic curve, solver curve, MC points."""
    out = _outdir(output_dir)
    files, failures = [], []
    R = np.geomspace(1e-3 / t_d, 1e2 / t_d, 26)
    analytic = poisson_step_curve(t_d, R)
    ter = heaviside_ter(t_d)
    model_R = R[::5]
    solver = rate_curve(ter, SourceModel(SourceKind.POISSONIAN, 1.0), model_R)
    failures.extend({"R_per_s": r, "error": msg} for r, msg in solver.failures)

    mc_R = np.array([0.01, 0.1, 1.0, 10.0]) / t_d
    mc_rows = []
    config = DetectorConfig(ter=ter)
    for i, r in enumerate(mc_R):
        duration = duration_scale * 2e6 / r
        try:
            model = SourceModel(SourceKind.POISSONIAN, float(r))
            rp = _mc_registered_rate(model, config, duration, (seed, i))
        except (ParameterError, NumericalError) as exc:
            failures.append({"R_per_s": float(r), "error": str(exc)})
            continue
        mc_rows.append((float(r), rp))

    p = out / "saturation_analytic.csv"
    tagio.write_efficiency_csv(p, analytic)
    files.append(str(p))
    p = out / "saturation_solver.csv"
    tagio.write_efficiency_csv(p, solver)
    files.append(str(p))
    if mc_rows:
        mc_curve = EfficiencyCurve(np.array([r for r, _ in mc_rows]),
                                   np.array([rp for _, rp in mc_rows]))
        p = out / "saturation_mc.csv"
        tagio.write_efficiency_csv(p, mc_curve)
        files.append(str(p))
    if figures:
        curves = {"closed form": analytic, "survival solver": solver}
        if mc_rows:
            curves["Monte Carlo"] = mc_curve
        files.append(plots.save_rate_curves(out / "saturation_rates.png",
                                            curves, t_d=t_d))
        files.append(plots.save_efficiency_curves(
            out / "saturation_efficiency.png", curves, t_d=t_d))
    return {"preset": "saturation", "t_d": t_d, "files": files,
            "failures": failures}


def _efficiency_models(t_d):
    return {
        "poisson": SourceModel(SourceKind.POISSONIAN, 1.0),
        "thermal T=t_d": SourceModel(SourceKind.THERMAL_BUNCHED, 1.0, t_d),
        "thermal T=t_d/4": SourceModel(SourceKind.THERMAL_BUNCHED, 1.0, t_d / 4),
        "antibunched T=t_d": SourceModel(SourceKind.TWO_LEVEL_ANTIBUNCHED,
                                         1.0, t_d),
        "antibunched T=t_d/4": SourceModel(SourceKind.TWO_LEVEL_ANTIBUNCHED,
                                           1.0, t_d / 4),
    }


def run_efficiency(output_dir, seed=0, t_d=DEFAULT_T_D, figures=True,
                   points=17):
    """Saturation efficiency vs rate for the three source archetypes."""
    out = _outdir(output_dir)
    files, failures = [], []
    curves = {}
    for label, model in _efficiency_models(t_d).items():
        hi = 30.0 / t_d
        if model.kind is SourceKind.TWO_LEVEL_ANTIBUNCHED:
            hi = 0.9 / model.T
        I = np.geomspace(1e-3 / t_d, hi, points)
        try:
            eff = rate_curve(heaviside_ter(t_d), model, I)
        except NumericalError as exc:
            failures.append({"model": label, "error": str(exc)})
            continue
        failures.extend({"model": label, "R_per_s": r, "error": msg}
                        for r, msg in eff.failures)
        curves[label] = eff
        slug = label.replace(" ", "_").replace("=", "").replace("/", "_")
        p = out / f"efficiency_{slug}.csv"
        tagio.write_efficiency_csv(p, eff)
        files.append(str(p))
    if figures and curves:
        files.append(plots.save_efficiency_curves(
            out / "efficiency_vs_incident.png", curves, t_d=t_d, x_axis="R"))
        files.append(plots.save_efficiency_curves(
            out / "efficiency_vs_registered.png", curves, t_d=t_d,
            x_axis="R_prime"))
    return {"preset": "efficiency", "t_d": t_d, "files": files,
            "failures": failures}


def _step_efficiency_grid(t_d):
    return poisson_step_curve(t_d, np.geomspace(1e0, 1e10, 2001))


def run_suppression(output_dir, seed=0, t_d=DEFAULT_T_D, figures=True,
                    orders=(2, 3, 4), points=25):
    """Predicted zero-delay correlations vs registered rate.

    Uses the Poissonian saturation curve of each recovery model as the
    local efficiency inside the thermal-intensity average: the step
    (closed form) and the shipped measured-shape stand-in (solver).
    """
    out = _outdir(output_dir)
    files, failures = [], []
    step_eff = _step_efficiency_grid(t_d)
    tab = default_snspd_ter(t_half=t_d)
    poisson = SourceModel(SourceKind.POISSONIAN, 1.0)
    tab_eff = rate_curve(tab, poisson, np.geomspace(1e0, 9e8, 41))
    failures.extend({"curve": "stand-in", "R_per_s": r, "error": msg}
                    for r, msg in tab_eff.failures)

    targets = np.geomspace(1e4, 2e7, points)
    rows = {"step": [], "stand-in": []}
    for label, eff in (("step", step_eff), ("stand-in", tab_eff)):
        for rp in targets:
            try:
                mean_R = incident_for_registered(eff, rp)
                row = [rp, mean_R] + [predict_gn_zero(eff, mean_R, n)
                                      for n in orders]
            except NumericalError as exc:
                failures.append({"curve": label, "R_prime_per_s": float(rp),
                                 "error": str(exc)})
                continue
            rows[label].append(row)

    header = ["R_prime_per_s", "R_mean_per_s"] + [f"g{n}" for n in orders]
    for label, data in rows.items():
        if not data:
            continue
        p = out / f"suppression_{label.replace('-', '_')}.csv"
        pd.DataFrame(data, columns=header).to_csv(p, index=False)
        files.append(str(p))
    if figures:
        for label, data in rows.items():
            if not data:
                continue
            arr = np.asarray(data)
            predicted = {n: arr[:, 2 + i] for i, n in enumerate(orders)}
            files.append(plots.save_gn_vs_rate(
                out / f"suppression_{label.replace('-', '_')}.png",
                arr[:, 0], predicted, orders,
                title=f"{label} recovery, t_d = {t_d * 1e9:.0f} ns"))
    return {"preset": "suppression", "t_d": t_d, "files": files,
            "failures": failures}


def run_array(output_dir, seed=0, t_d=DEFAULT_T_D, figures=True,
              duration_scale=1.0, m_values=(2, 3, 4, 6, 8),
              incident_rates=(5e6, 2e7), T=418e-9):
    """Monte Carlo array mitigation plus analytic coincidence scaling."""
    out = _outdir(output_dir)
    files, failures = [], []
    ter = heaviside_ter(t_d)
    sweeps = {}
    for i, rate in enumerate(incident_rates):
        model = SourceModel(SourceKind.THERMAL_BUNCHED, float(rate), T)
        duration = duration_scale * min(2.0, 4e7 / rate)
        try:
            sweeps[f"R = {rate:.2g}/s"] = array_g2_sweep(
                model, ter, list(m_values), duration, (seed, i))
        except (ParameterError, NumericalError) as exc:
            failures.append({"incident_rate": float(rate), "error": str(exc)})

    for label, sweep in sweeps.items():
        slug = label.replace(" ", "").replace("=", "").replace("/s", "")
        p = out / f"array_g2_{slug}.csv"
        pd.DataFrame({
            "m": sweep.m_values,
            "g2_zero": sweep.g2,
            "stderr": sweep.stderr,
            "pair_rate_per_s": sweep.pair_rate,
        }).to_csv(p, index=False)
        files.append(str(p))

    eff = _step_efficiency_grid(t_d)
    m_grid = np.arange(2, 33)
    scaling = {}
    for n in (2, 3, 4):
        col = []
        for m in m_grid:
            if m < n:
                col.append(np.nan)
                continue
            try:
                col.append(coincidence_rate_scaling(int(m), n, 4.0 / t_d, eff))
            except NumericalError as exc:
                failures.append({"m": int(m), "n": n, "error": str(exc)})
                col.append(np.nan)
        scaling[f"n = {n}"] = np.asarray(col)
    p = out / "array_scaling.csv"
    pd.DataFrame({"m": m_grid, **{f"C_n{n}": scaling[f"n = {n}"]
                                  for n in (2, 3, 4)}}).to_csv(p, index=False)
    files.append(str(p))

    if figures:
        if sweeps:
            files.append(plots.save_array_sweep(out / "array_g2.png", sweeps))
        files.append(plots.save_scaling_curves(out / "array_scaling.png",
                                               m_grid, scaling))
    return {"preset": "array", "t_d": t_d, "files": files,
            "failures": failures}


RUNNERS = {
    "saturation": run_saturation,
    "efficiency": run_efficiency,
    "suppression": run_suppression,
    "array": run_array,
}


def run_preset(name, output_dir, **kwargs):
    if name not in RUNNERS:
        raise ParameterError(
            f"unknown preset '{name}'; choose from {', '.join(PRESETS)}"
        )
    return RUNNERS[name](output_dir, **kwargs)
