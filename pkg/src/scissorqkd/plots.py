"""Figure rendering for sweep results and quadrature densities.

Everything draws to files through the Agg backend; no display is assumed.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .infotheory import output_density
from .params import ChannelParams, ProtocolParams, QSParams
from .rates import RatePoint


def render_sweep_figure(points: list[RatePoint], path: str) -> None:
    """Rate-versus-distance curves, one colour per noise setting."""
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    eps_values = sorted({p.eps_tm for p in points})
    colors = plt.cm.viridis(np.linspace(0.0, 0.8, len(eps_values)))
    for eps, color in zip(eps_values, colors):
        rows = sorted((p for p in points if p.eps_tm == eps and p.status != ""),
                      key=lambda p: p.distance_km)
        d = np.array([p.distance_km for p in rows])
        ax.plot(d, [max(p.rate_qs, 0.0) for p in rows], color=color,
                linestyle="--", label=f"scissor, eps_tm={eps:g}")
        ax.plot(d, [max(p.rate_noqs, 0.0) for p in rows], color=color,
                linestyle="-", alpha=0.7, label=f"no scissor, eps_tm={eps:g}")
        finite_plob = [(p.distance_km, p.tl_plob) for p in rows
                       if math.isfinite(p.tl_plob) and p.tl_plob > 0.0]
        if finite_plob:
            ax.plot(*zip(*finite_plob), color=color, linestyle=":",
                    alpha=0.8, label=f"TL-PLOB, eps_tm={eps:g}")
    ax.set_yscale("log")
    ax.set_xlabel("distance (km)")
    ax.set_ylabel("secret key rate (bits/use)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=200)
    plt.close(fig)


def render_density_figure(proto: ProtocolParams, chan: ChannelParams,
                          qs: QSParams, path: str) -> None:
    """Heralded output distribution split into its Gaussian and quadratic parts."""
    dens = output_density(proto, chan, qs)
    x = np.linspace(-4.0, 4.0, 400)
    envelope = np.exp(-x * x) / math.sqrt(math.pi)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(x, dens(x), "k-", label="total")
    ax.plot(x, dens.coeff_gauss * envelope, "b--", label="gaussian part")
    ax.plot(x, dens.coeff_x2 * x * x * envelope, "r-.", label="quadratic part")
    ax.set_xlabel("homodyne outcome")
    ax.set_ylabel("probability density")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=200)
    plt.close(fig)
