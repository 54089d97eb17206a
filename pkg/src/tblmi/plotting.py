"""SVG figures for the CLI reports (matplotlib, non-interactive backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no timestamp so reruns give identical files
plt.rcParams["svg.hashsalt"] = "tblmi"
plt.rcParams["svg.fonttype"] = "none"
_META = {"Date": None, "Creator": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def spectrum_figure(eigs, in_strip, omega: float, path) -> None:
    """Scatter of the truncated harmonic spectrum, strip points highlighted."""
    eigs = np.asarray(eigs)
    in_strip = np.asarray(in_strip, dtype=bool)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.scatter(eigs.real[~in_strip], eigs.imag[~in_strip], s=8, c="0.6", label="all")
    ax.scatter(eigs.real[in_strip], eigs.imag[in_strip], s=30, c="C3", marker="x",
               label="fundamental strip")
    ax.axhspan(-omega / 2, omega / 2, color="C0", alpha=0.08)
    ax.axvline(0.0, color="k", lw=0.6)
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.legend(loc="best", fontsize=8)
    _save(fig, path)


def gain_stem_figure(gains: dict, path) -> None:
    """``|K_k|`` against ``k`` for each truncation order, one panel per gain entry.

    ``gains`` maps a label (e.g. ``"m=10"``) to a PeriodicMatrix.
    """
    first = next(iter(gains.values()))
    n_u, n = first.shape
    fig, axes = plt.subplots(n_u, n, figsize=(4.2 * n, 3.2 * n_u), squeeze=False)
    nseries = len(gains)
    for s, (label, K) in enumerate(gains.items()):
        d = K.degree
        ks = np.arange(-d, d + 1)
        mags = np.abs(K.stack(d))
        shift = (s - (nseries - 1) / 2) * 0.18
        for i in range(n_u):
            for j in range(n):
                ax = axes[i, j]
                ml, sl, bl = ax.stem(ks + shift, mags[:, i, j], linefmt=f"C{s}-",
                                     markerfmt=f"C{s}o", basefmt=" ", label=label)
                ml.set_markersize(3)
                sl.set_linewidth(0.8)
    for i in range(n_u):
        for j in range(n):
            ax = axes[i, j]
            ax.set_title(f"|K[{i},{j}]_k|", fontsize=9)
            ax.set_xlabel("k")
    axes[0, 0].legend(fontsize=8)
    _save(fig, path)


def trajectory_figure(trajs: dict, period: float, path, logscale: bool = False) -> None:
    """State components against time; ``trajs`` maps labels to Trajectory objects."""
    first = next(iter(trajs.values()))
    n = first.states.shape[1]
    fig, axes = plt.subplots(n, 1, figsize=(6.5, 2.4 * n), sharex=True, squeeze=False)
    for s, (label, tr) in enumerate(trajs.items()):
        t = tr.times / period
        for i in range(n):
            y = np.abs(tr.states[:, i]) if logscale else tr.states[:, i]
            axes[i, 0].plot(t, y, color=f"C{s}", lw=1.0, label=label)
    for i in range(n):
        axes[i, 0].set_ylabel(f"|x{i + 1}|" if logscale else f"x{i + 1}")
        if logscale:
            axes[i, 0].set_yscale("log")
        axes[i, 0].grid(alpha=0.3)
    axes[-1, 0].set_xlabel("t / T")
    axes[0, 0].legend(fontsize=8)
    _save(fig, path)


def sweep_figure(rows: list[dict], path) -> None:
    ms = np.array([r["m"] for r in rows], dtype=float)
    tr = np.array([r["trace"] for r in rows], dtype=float)
    gd = np.array([r["gain_distance_rel"] for r in rows], dtype=float)
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(8, 3.2))
    a1.plot(ms, tr, "o-")
    a1.set_xlabel("m")
    a1.set_ylabel("trace")
    ok = np.isfinite(gd) & (gd > 0)
    if ok.any():
        a2.semilogy(ms[ok], gd[ok], "s-", color="C1")
    a2.set_xlabel("m")
    a2.set_ylabel("gain distance to finest (rel.)")
    _save(fig, path)
