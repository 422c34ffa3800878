"""Static SVG figures: time series, equal-area diagram, basin map."""
from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .eac import EacInputs, swing_areas  # noqa: E402
from .model import equilibria  # noqa: E402
from .sim import BasinMap, Trajectory  # noqa: E402

__all__ = ["plot_trajectory", "plot_eac_areas", "plot_basin"]

_STAGE_COLORS = {1: "#f2f2f2", 2: "#fde0dd", 3: "#e0ecf4", 4: "#e5f5e0"}


def _save(fig, path):
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)


def plot_trajectory(traj: Trajectory, path, omega_0: float | None = None):
    """Angle, frequency deviation, currents and terminal voltage with stages shaded.

    With ``omega_0`` the frequency panel is annotated in Hz instead of rad/s.
    """
    fig, axes = plt.subplots(4, 1, sharex=True, figsize=(7, 8))
    t = traj.t
    edges = np.flatnonzero(np.diff(traj.stage)) + 1
    bounds = [0, *edges, len(t) - 1]
    for ax in axes:
        for a, b in zip(bounds[:-1], bounds[1:]):
            ax.axvspan(t[a], t[b], color=_STAGE_COLORS.get(int(traj.stage[a]), "white"), lw=0)
    axes[0].plot(t, traj.phi, "k")
    axes[0].set_ylabel("phi (rad)")
    if omega_0:
        axes[1].plot(t, traj.omega / (2 * math.pi), "k")
        axes[1].set_ylabel("f deviation (Hz)")
    else:
        axes[1].plot(t, traj.omega, "k")
        axes[1].set_ylabel("omega (rad/s)")
    axes[2].plot(t, traj.i_d, label="i_d")
    axes[2].plot(t, traj.i_q, label="i_q")
    axes[2].set_ylabel("current (pu)")
    axes[2].legend(loc="best", fontsize="small")
    axes[3].plot(t, traj.U_t, "k")
    axes[3].set_ylabel("U_t (pu)")
    axes[3].set_xlabel("t (s)")
    _save(fig, path)


def plot_eac_areas(inp: EacInputs, phi_cr: float, path, label: str = "phi_cr"):
    """Power-angle curves with the accelerating and decelerating areas shaded.

    The areas in the legend come from :func:`swing_areas`, the quadrature used
    by the analyzer.
    """
    e_ac, e_de = swing_areas(inp, phi_cr)
    phi = np.linspace(0, math.pi, 400)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(phi, inp.U_g1 * np.sin(phi), "k", label="post-fault")
    ax.plot(phi, inp.U_g2 * np.sin(phi), "k--", label="during fault")
    ax.axhline(inp.P_m2, color="tab:gray", lw=1)
    acc = np.linspace(inp.phi_1, phi_cr, 200)
    dec = np.linspace(phi_cr, inp.phi_3u, 200)
    ax.fill_between(acc, inp.U_g2 * np.sin(acc), inp.P_m2, color="tab:red", alpha=0.4,
                    label=f"E_ac = {e_ac:.4f}")
    ax.fill_between(dec, inp.P_m2, inp.U_g1 * np.sin(dec), color="tab:blue", alpha=0.4,
                    label=f"E_de = {e_de:.4f}")
    ax.axvline(phi_cr, color="tab:green", lw=1)
    ax.annotate(f"{label} = {phi_cr:.3f}", (phi_cr, 0), textcoords="offset points", xytext=(4, 4))
    ax.set_xlabel("phi (rad)")
    ax.set_ylabel("power (pu)")
    ax.legend(loc="upper left", fontsize="small")
    _save(fig, path)
    return e_ac, e_de


def plot_basin(bm: BasinMap, path, X_g: float, overlay: BasinMap | None = None,
               trajectory: Trajectory | None = None):
    """Basin heatmap with SEP/UEP markers; ``overlay`` outlines a second basin."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    extent = (*bm.phi_range, *bm.omega_range)
    ax.imshow(bm.grid.T, origin="lower", extent=extent, aspect="auto", cmap="Blues", vmin=0, vmax=1.6,
              interpolation="nearest")
    if overlay is not None:
        ax.contour(overlay.phi_centers, overlay.omega_centers, overlay.grid.T.astype(float), levels=[0.5],
                   colors="tab:orange", linewidths=1.5, linestyles="--")
        ax.plot([], [], "--", color="tab:orange", label=f"boundary at i_d = {overlay.i_d:g} pu")
    eq = equilibria(bm.i_d, bm.U_g, X_g)
    ax.plot(eq.phi_s, 0, "ko", label="SEP")
    ax.plot(eq.phi_u, 0, "o", mfc="white", mec="k", label="UEP")
    if trajectory is not None:
        ax.plot(trajectory.phi, trajectory.omega, "r-", lw=1, label="trajectory")
    ax.set_xlim(bm.phi_range)
    ax.set_ylim(bm.omega_range)
    ax.set_xlabel("phi (rad)")
    ax.set_ylabel("omega (rad/s)")
    ax.set_title(f"i_d = {bm.i_d:g} pu, U_g = {bm.U_g:g} pu")
    ax.legend(loc="upper right", fontsize="small")
    _save(fig, path)
