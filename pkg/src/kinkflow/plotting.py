"""Figures for ``kinkflow report``; matplotlib is imported only here, on demand."""

from __future__ import annotations

from pathlib import Path

import numpy as np

STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 10,
    "legend.frameon": False,
    "lines.linewidth": 1.4,
}


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    return plt


def _columns(header, data, prefix):
    return [i for i, name in enumerate(header) if name.startswith(prefix)]


def _save(plt, fig, path: Path) -> Path:
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def figure_validate(header, data, path: Path) -> Path:
    """Observed and Toda gaps against log(-c t)/sqrt2."""
    plt = _pyplot()
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        s = data[:, header.index("log_scale")]
        for i in _columns(header, data, "gap_obs_"):
            ax.plot(s, data[:, i], "o", ms=3, label=header[i])
        for i in _columns(header, data, "gap_toda_"):
            ax.plot(s, data[:, i], "-", label=header[i])
        ax.set_xlabel("log(-c t) / sqrt 2")
        ax.set_ylabel("gap")
        ax.legend()
        return _save(plt, fig, path)


def figure_toda(header, data, path: Path) -> Path:
    plt = _pyplot()
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        t = data[:, header.index("t")]
        for i in _columns(header, data, "xi_"):
            ax.plot(-t, data[:, i], label=header[i])
        ax.set_xscale("log")
        ax.invert_xaxis()
        ax.set_xlabel("-t")
        ax.set_ylabel("interface position")
        ax.legend(ncol=2)
        return _save(plt, fig, path)


def figure_spectral(header, data, path: Path) -> Path:
    plt = _pyplot()
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        x = data[:, 0]
        for i in range(1, data.shape[1]):
            ax.plot(x, data[:, i], label=header[i])
        ax.set_xlim(-10, 10)
        ax.set_xlabel("x")
        ax.legend()
        return _save(plt, fig, path)


def figure_linear(header, data, path: Path) -> Path:
    plt = _pyplot()
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(data[:, 0], data[:, 1])
        ax.set_xlabel("t")
        ax.set_ylabel("sup |psi| / Phi")
        return _save(plt, fig, path)


def figure_simulate(header, data, path: Path) -> Path:
    """Field snapshots from the long-format (t, x, u) table."""
    plt = _pyplot()
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        t = data[:, 0]
        stamps = np.unique(t)
        for ts in stamps[:: max(1, stamps.size // 5)]:
            sel = t == ts
            ax.plot(data[sel, 1], data[sel, 2], label=f"t={ts:g}")
        ax.set_xlabel("x")
        ax.set_ylabel("u")
        ax.legend()
        return _save(plt, fig, path)


FIGURES = {
    "validate": ("trajectories.csv", figure_validate),
    "toda": ("toda.csv", figure_toda),
    "spectral": ("modes.csv", figure_spectral),
    "linear": ("norms.csv", figure_linear),
    "simulate": ("snapshots.csv", figure_simulate),
}
