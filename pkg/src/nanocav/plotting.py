"""Static figures written as SVG files.

Figures are built on bare ``matplotlib.figure.Figure`` objects (no pyplot
state), so plotting is safe from worker threads and never opens a window.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np
from matplotlib import rc_context
from matplotlib.figure import Figure
from scipy.constants import c as C_LIGHT

from .formats import _default_permissions
from .specfit import AiryFit, FinesseCurve, airy_model
from .spectrum import SpectrumScan

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.0,
    "lines.markersize": 3,
    "svg.hashsalt": "nanocav",
    "svg.fonttype": "none",
}


def figsize(width: float = 5.0, ratio: float = GOLDEN) -> tuple[float, float]:
    return (width, width * ratio)


def save(fig: Figure, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.stem}.", suffix=path.suffix, dir=path.parent)
    os.close(fd)
    try:
        with rc_context(STYLE):
            fig.savefig(tmp, format=path.suffix.lstrip(".") or "svg", metadata={"Date": None})
        _default_permissions(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
    return path


def plot_fsr_scan(scan: SpectrumScan, fit: AiryFit, path=None) -> Figure:
    """Transmission over one FSR with the Airy fit and residuals below."""
    with rc_context(STYLE):
        fig = Figure(figsize=figsize(5.0, 0.8))
        top, bottom = fig.subplots(2, 1, sharex=True, gridspec_kw={"height_ratios": [3, 1]})
        det = (scan.frequency - fit.center) * 1e-9
        fine = np.linspace(scan.frequency[0], scan.frequency[-1], 4000)
        top.plot(det, scan.transmission, ".", color="0.4", label="scan")
        top.plot((fine - fit.center) * 1e-9, airy_model(fine, *fit.params()), "-", color="C3",
                 label=f"Airy fit, F = {fit.finesse:.1f}")
        top.set_ylabel("T / T$_{off}$" if scan.normalization == "off_band_normalized" else "transmission")
        top.legend(loc="upper right", frameon=False)
        bottom.plot(det, fit.residuals, ".", color="0.4")
        bottom.axhline(0.0, color="C3", lw=0.8)
        bottom.set_ylabel("residual")
        bottom.set_xlabel("detuning (GHz)")
        fig.align_ylabels()
        fig.tight_layout()
    if path is not None:
        save(fig, path)
    return fig


def plot_band(spectrum: SpectrumScan, curve: FinesseCurve, reference_frequency: float, path=None) -> Figure:
    """Transmission across the stop band with fitted finesse on a second axis."""
    with rc_context(STYLE):
        fig = Figure(figsize=figsize(6.0))
        ax = fig.subplots()
        det = (spectrum.frequency - reference_frequency) * 1e-9
        ax.plot(det, spectrum.transmission, "-", color="0.5", lw=0.5)
        ax.set_xlabel(f"detuning from {C_LIGHT / reference_frequency * 1e9:.4f} nm (GHz)")
        ax.set_ylabel("T / T$_{off}$" if spectrum.normalization == "off_band_normalized" else "transmission")
        if len(curve):
            a = curve.arrays()
            ax2 = ax.twinx()
            ax2.errorbar((a["center"] - reference_frequency) * 1e-9, a["finesse"], yerr=a["stderr"],
                         fmt="o", color="C0", ms=3, capsize=1.5)
            ax2.set_ylabel("finesse", color="C0")
            ax2.tick_params(axis="y", colors="C0")
            ax2.set_ylim(bottom=0)
        fig.tight_layout()
    if path is not None:
        save(fig, path)
    return fig


def plot_modes(wavelengths, n_eff, a_eff, cutoff: float | None = None, path=None) -> Figure:
    with rc_context(STYLE):
        fig = Figure(figsize=figsize(5.0))
        ax = fig.subplots()
        wl = np.asarray(wavelengths) * 1e9
        ax.plot(wl, n_eff, "-", color="C0")
        ax.set_xlabel("wavelength (nm)")
        ax.set_ylabel("n$_{eff}$", color="C0")
        ax2 = ax.twinx()
        ax2.plot(wl, np.asarray(a_eff) * 1e12, "--", color="C1")
        ax2.set_ylabel("A$_{eff,surf}$ ($\\mu$m$^2$)", color="C1")
        if cutoff is not None:
            ax.axvline(cutoff * 1e9, color="0.5", lw=0.8, ls=":")
        fig.tight_layout()
    if path is not None:
        save(fig, path)
    return fig
