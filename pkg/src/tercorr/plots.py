"""Figure rendering for the report paths.

Every function writes one PNG next to the delimited output and returns
the path.  Axes carry unitless rate products (R * t_d) where that is the
natural scale; everything else is labeled in SI units.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import math

import matplotlib.pyplot as plt
import numpy as np

FIG_DPI = 150


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=FIG_DPI)
    plt.close(fig)
    return str(path)


def save_rate_curves(path, curves, t_d=None, title=None):
    """Registered vs incident rate for one or more labeled curves.

    curves: mapping label -> EfficiencyCurve.  With t_d given, both axes
    are scaled to the unitless saturation parameter R * t_d.
    """
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    scale = t_d if t_d else 1.0
    for label, eff in curves.items():
        ax.loglog(eff.R * scale, eff.R_prime * scale, label=label)
    lims = ax.get_xlim()
    ref = np.geomspace(*lims, 50)
    ax.loglog(ref, ref, ":", color="0.6", lw=1, label="no loss")
    ax.set_xlabel(r"incident rate $R\,t_d$" if t_d else "incident rate $R$ (1/s)")
    ax.set_ylabel(r"registered rate $R'\,t_d$" if t_d else
                  "registered rate $R'$ (1/s)")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title, fontsize=10)
    return _finish(fig, path)


def save_efficiency_curves(path, curves, t_d=None, x_axis="R", title=None):
    """Saturation efficiency epsilon vs incident (or registered) rate."""
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    scale = t_d if t_d else 1.0
    for label, eff in curves.items():
        x = (eff.R if x_axis == "R" else eff.R_prime) * scale
        ax.semilogx(x, eff.epsilon, label=label)
    base = "R" if x_axis == "R" else "R'"
    unit = r"\,t_d$" if t_d else "$ (1/s)"
    ax.set_xlabel(f"${base}{unit}")
    ax.set_ylabel(r"efficiency $\epsilon = R'/R$")
    ax.set_ylim(0, 1.05)
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title, fontsize=10)
    return _finish(fig, path)


def save_ter_curve(path, ter, title=None):
    """Tabulated recovery curve eta(dt)."""
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.plot(ter.dt_ps / 1e3, ter.eta, lw=1)
    ax.axhline(ter.eta_inf, ls=":", color="0.6", lw=1)
    ax.set_xlabel("time since last detection (ns)")
    ax.set_ylabel(r"efficiency $\eta$")
    ax.set_ylim(-0.02, 1.05)
    if title:
        ax.set_title(title, fontsize=10)
    return _finish(fig, path)


def save_wtd(path, wtd, fit=None, title=None):
    """Interarrival histogram (log counts) with an optional fitted tail."""
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    t_ns = (np.arange(wtd.omega.size) + 0.5) * wtd.dt_ps / 1e3
    ax.semilogy(t_ns, np.where(wtd.omega > 0, wtd.omega, np.nan),
                ".", ms=2, label="measured")
    if fit is not None:
        t = np.linspace(0, t_ns[-1], 200)
        ax.semilogy(t, fit.amplitude * np.exp(-fit.rate * t * 1e-9),
                    "-", lw=1, label="exponential tail")
        ax.axvline(fit.t_min * 1e9, ls=":", color="0.6", lw=1)
    ax.set_xlabel("interarrival time (ns)")
    ax.set_ylabel("counts" if wtd.origin == "empirical" else "survival")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title, fontsize=10)
    return _finish(fig, path)


def save_g2(path, hist, title=None):
    """Normalized pair-correlation histogram vs delay."""
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.plot(hist.axes[0] / 1e3, hist.normalized, lw=0.8)
    ax.axhline(1.0, ls=":", color="0.6", lw=1)
    ax.set_xlabel(r"delay $\tau$ (ns)")
    ax.set_ylabel(r"$g^{(2)}(\tau)$")
    if title:
        ax.set_title(title, fontsize=10)
    return _finish(fig, path)


def save_g3(path, hist, title=None):
    """Third-order correlation surface as an image map."""
    fig, ax = plt.subplots(figsize=(4.8, 4.2))
    extent = [hist.axes[0][0] / 1e3, hist.axes[0][-1] / 1e3,
              hist.axes[1][0] / 1e3, hist.axes[1][-1] / 1e3]
    im = ax.imshow(hist.normalized.T, origin="lower", extent=extent,
                   aspect="equal", cmap="viridis")
    fig.colorbar(im, ax=ax, label=r"$g^{(3)}(\tau_1, \tau_2)$")
    ax.set_xlabel(r"$\tau_1$ (ns)")
    ax.set_ylabel(r"$\tau_2$ (ns)")
    if title:
        ax.set_title(title, fontsize=10)
    return _finish(fig, path)


def save_gn_vs_rate(path, rate, predicted, orders, measured=None, title=None):
    """Zero-delay correlation vs registered rate, per order.

    predicted: mapping order -> array over `rate`; measured (optional):
    mapping order -> (rates, values, errors) scatter points.
    """
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    colors = plt.cm.viridis(np.linspace(0.0, 0.8, len(orders)))
    for color, n in zip(colors, orders):
        ax.semilogx(rate, predicted[n], color=color, lw=1.2,
                    label=rf"$n={n}$")
        ax.axhline(float(math.factorial(n)), color=color, ls=":", lw=0.8)
        if measured and n in measured:
            r, v, e = measured[n]
            ax.errorbar(r, v, yerr=e, fmt="o", color=color, ms=4, capsize=2)
    ax.set_xlabel(r"registered rate $R'$ (1/s)")
    ax.set_ylabel(r"$g^{(n)}(0,\dots)$")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title, fontsize=10)
    return _finish(fig, path)


def save_array_sweep(path, sweeps, ideal=2.0, title=None):
    """Pair correlation vs array size for labeled Monte Carlo sweeps."""
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    for label, sweep in sweeps.items():
        ax.errorbar(sweep.m_values, sweep.g2, yerr=sweep.stderr,
                    fmt="o-", ms=4, lw=1, capsize=2, label=label)
    ax.axhline(ideal, ls=":", color="0.6", lw=1)
    ax.set_xlabel("number of detectors $m$")
    ax.set_ylabel(r"$g^{(2)}(0)$")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title, fontsize=10)
    return _finish(fig, path)


def save_scaling_curves(path, m_values, curves, title=None):
    """n-fold coincidence-rate scaling vs array size (log y)."""
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    for label, c in curves.items():
        ax.semilogy(m_values, c, "o-", ms=3, lw=1, label=label)
    ax.set_xlabel("number of detectors $m$")
    ax.set_ylabel("relative coincidence rate")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title, fontsize=10)
    return _finish(fig, path)
