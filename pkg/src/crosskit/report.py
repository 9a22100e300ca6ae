"""SVG plots of a sweep directory."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .tables import float_column, read_csv  # noqa: E402

__all__ = ["render_report"]


def _jeff_plot(cols, out: Path) -> Path:
    rows = np.array(cols["row"])
    pts = rows == "point"
    delta = float_column(cols, "delta_mhz")
    amp = float_column(cols, "amplitude")
    jeff = float_column(cols, "jeff_mhz")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    deltas = sorted(set(delta[pts]))
    cmap = plt.get_cmap("viridis", max(len(deltas), 2))
    for i, d in enumerate(deltas):
        m = pts & (delta == d) & np.isfinite(jeff)
        ax.plot(amp[m], jeff[m], ".-", color=cmap(i), lw=0.8, ms=3, label=f"{d:g} MHz")
    ax.set_xscale("log")
    ax.set_xlabel("CR amplitude (MHz)")
    ax.set_ylabel("J_eff (MHz)")
    if len(deltas) <= 12:
        ax.legend(fontsize=7, title="detuning")
    fig.tight_layout()
    path = out / "jeff_vs_amplitude.svg"
    fig.savefig(path)
    plt.close(fig)
    return path


def _mu_plot(cols, out: Path) -> Path:
    d = float_column(cols, "delta_mhz")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.errorbar(d, float_column(cols, "mu_measured"), yerr=float_column(cols, "mu_measured_ci95"),
                fmt="o", ms=3, label="simulated slope")
    ax.plot(d, float_column(cols, "mu_numeric"), "-", label="exact dressing")
    closed = float_column(cols, "mu_closed")
    ax.plot(d, np.where(np.abs(closed) < 0.2, closed, np.nan), "--", label="closed form")
    for x in (0.0, 360.0):
        ax.axvline(x, color="gray", ls=":", lw=0.8)
    ax.axhline(0.0, color="k", lw=0.5)
    ax.set_xlabel("detuning (MHz)")
    ax.set_ylabel("mu (MHz per MHz of drive)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = out / "mu_vs_delta.svg"
    fig.savefig(path)
    plt.close(fig)
    return path


def _saturation_plot(cols, out: Path, coupling_j: float | None) -> Path:
    d = float_column(cols, "delta_mhz")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.errorbar(d, float_column(cols, "level_mhz"), yerr=float_column(cols, "level_ci95"), fmt="o", ms=3)
    for x in (0.0, 360.0):
        ax.axvline(x, color="gray", ls=":", lw=0.8)
    if coupling_j is not None:
        ax.axhline(coupling_j, color="r", ls="--", lw=0.8, label=f"J = {coupling_j:g} MHz")
        ax.legend(fontsize=8)
    ax.set_xlabel("detuning (MHz)")
    ax.set_ylabel("saturation level (MHz)")
    fig.tight_layout()
    path = out / "saturation_vs_delta.svg"
    fig.savefig(path)
    plt.close(fig)
    return path


def _coupling_from_echo(directory: Path) -> float | None:
    cfg = directory / "config.txt"
    if not cfg.exists():
        return None
    for line in cfg.read_text().splitlines():
        key, _, value = line.partition("=")
        if key.strip() == "j_mhz":
            return float(value)
    return None


def render_report(directory) -> list[Path]:
    """Write SVG plots for whichever sweep tables exist in ``directory``.

    Raises :class:`FileNotFoundError` when the directory holds none of them.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"{directory}: not a directory")
    written = []
    if (directory / "jeff.csv").exists():
        cols, _ = read_csv(directory / "jeff.csv", ("row", "delta_mhz", "amplitude", "jeff_mhz"))
        written.append(_jeff_plot(cols, directory))
    if (directory / "mu.csv").exists():
        cols, _ = read_csv(directory / "mu.csv", ("delta_mhz", "mu_measured", "mu_measured_ci95",
                                                   "mu_closed", "mu_numeric"))
        written.append(_mu_plot(cols, directory))
    if (directory / "saturation.csv").exists():
        cols, _ = read_csv(directory / "saturation.csv", ("delta_mhz", "level_mhz", "level_ci95"))
        written.append(_saturation_plot(cols, directory, _coupling_from_echo(directory)))
    if not written:
        raise FileNotFoundError(f"{directory}: no jeff.csv, mu.csv or saturation.csv to plot")
    return written
