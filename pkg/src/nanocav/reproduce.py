"""End-to-end workflow behind the ``report`` command.

Runs every model on the configured resonator and on the measured values
of the 4.6 K characterization, collecting scalar results into a RunReport.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.constants import c as C_LIGHT

from . import cavity, cqed, fibermode, scanforge, specfit, thermo
from .config import ToolkitConfig
from .formats import RunReport
from .spectrum import SpectrumScan


@dataclass(frozen=True)
class Measured:
    """Values read off the characterization measurements."""

    finesse_untapered: float = 177.7
    finesse: float = 29.4
    peak_over_tc: float = 0.14
    fsr: float = 1.05e9
    nu_c: float = 351.9127e12
    q_quoted: float = 9.9e6
    v_quoted_lambda3: float = 4.9e4
    purcell_quoted_averaged: float = 5.0
    lambda_room: float = 852.5555e-9
    lambda_cold: float = 851.8944e-9
    lambda_room_untapered: float = 852.3305e-9
    shift_untapered: float = -0.7969e-9
    t_room: float = 295.0
    t_cold: float = 4.6
    band_hwhm: float = 0.1e-9
    warmup_shift: float = 0.0209e-9


MEASURED = Measured()


def band_sweep(cfg: ToolkitConfig, *, half_width: float = 0.1e-9, stride: int = 4, repeats: int = 3,
               points: int = 800, noise: scanforge.NoiseModel | None = None):
    """Simulate and fit a sweep across the stop band.

    Returns (normalized scans, fits, failures, curve, off-band level).
    """
    conf = cfg.cavity
    lam_c = cavity.center_wavelength(conf.mirror_1, conf.mirror_2, conf.single_pass_transmission)
    if noise is None:
        noise = cfg.noise if not cfg.noise.is_zero else scanforge.NoiseModel(0.002, 0.0, cfg.noise.seed)
    # off-band reference, 10 band widths red of centre
    nu_ref = C_LIGHT / (lam_c + 20 * max(half_width, 0.1e-9))
    ref = scanforge.generate_scan(conf, (nu_ref - 2e9, nu_ref + 2e9), 256, scanforge.member_noise(noise, 10**6, 0))
    level_window = (ref.frequency[0], ref.frequency[-1])
    scans = scanforge.sweep_band(conf, (lam_c - half_width, lam_c + half_width), points, repeats, noise, stride=stride)
    scans = [specfit.normalize_off_band(s, level_window, reference=ref) for s in scans]
    fits, failures = specfit.fit_many(scans, conf.free_spectral_range)
    curve = specfit.finesse_vs_frequency(fits, 0.5 * stride * conf.free_spectral_range)
    level = scans[0].meta["off_band_level"] if scans else float("nan")
    return scans, fits, failures, curve, level


def run_report(cfg: ToolkitConfig, out_dir=None, *, figures: bool = True, sweep: bool = True) -> RunReport:
    t0 = time.perf_counter()
    m = MEASURED
    rep = RunReport(command="report", config=cfg.raw)

    fiber = cfg.fiber
    lam = cfg.emitter.wavelength
    fsr = cfg.cavity.free_spectral_range
    rep.add("fiber_diameter", fiber.diameter * 1e9, "nm")
    rep.add("single_mode_cutoff", fibermode.single_mode_cutoff(fiber) * 1e9, "nm")
    rep.add("v_number_at_emitter", fibermode.v_number(fiber, lam), "1")
    mode = fibermode.solve_he11(fiber, lam)
    rep.add("n_eff", mode.n_eff, "1")
    rep.add("a_eff_surf_min", mode.a_eff_surf * 1e12, "um^2")
    v_mode = cqed.mode_volume(mode.a_eff_surf, fsr)
    rep.add("mode_volume_min", v_mode / lam**3, "lambda^3")

    inv0 = cavity.invert_finesse_transmission(m.finesse_untapered, assume_tc_unity=True)
    rep.add("R_untapered", inv0.reflectivity, "1")
    inv = cavity.invert_finesse_transmission(m.finesse, m.peak_over_tc)
    rep.add("R_tapered", inv.reflectivity, "1")
    rep.add("T_c", inv.single_pass_transmission, "1")
    q = cavity.q_factor(m.finesse, m.fsr, m.nu_c)
    rep.add("Q", q, "1")
    rep.add("linewidth", m.fsr / m.finesse * 1e-6, "MHz")

    v_q = m.v_quoted_lambda3 * lam**3
    fp = cqed.purcell(m.q_quoted, v_q, lam, "aligned")
    fp_avg = cqed.purcell(m.q_quoted, v_q, lam, "orientation_averaged")
    rep.add("purcell_aligned", fp, "1")
    rep.add("purcell_averaged", fp_avg, "1")
    rep.add("cooperativity_aligned", fp / 2.0, "1")
    rep.add("purcell_aligned_model", cqed.purcell(q, v_mode, lam, "aligned"), "1")
    rep.add("purcell_averaged_model", cqed.purcell(q, v_mode, lam, "orientation_averaged"), "1")
    eta, p_tof = cfg.emitter.eta, cfg.emitter.p_tof
    rep.add("eta_c", cqed.channeling_efficiency(eta, p_tof, m.purcell_quoted_averaged), "1")
    rep.add("eta_threshold_0p8", cqed.channeling_threshold(p_tof, m.purcell_quoted_averaged, 0.8), "1")
    if cfg.emitter.dipole_moment is not None:
        em = cqed.EmitterParams.two_level(cfg.emitter.dipole_moment, lam)
        g = cqed.coupling_g(em, v_mode)
        kappa = cqed.cavity_kappa(em.omega, q)
        rep.add("g", g / (2 * math.pi) * 1e-6, "MHz")
        rep.add("kappa", kappa / (2 * math.pi) * 1e-6, "MHz")
        rep.add("gamma0", em.free_space_linewidth / (2 * math.pi) * 1e-6, "MHz")
        rep.add("cooperativity", cqed.cooperativity(g, em.free_space_linewidth, kappa), "1")

    params = cfg.thermo
    for tag, li, lf in (
        ("tapered", m.lambda_room, m.lambda_cold),
        ("untapered", m.lambda_room_untapered, m.lambda_room_untapered + m.shift_untapered),
    ):
        meas = thermo.ThermoMeasurement(li, lf, m.t_room, m.t_cold, shift_uncertainty=m.band_hwhm)
        res = thermo.extract_thermo_optic(meas, params)
        rep.add(f"shift_{tag}", meas.shift * 1e9, "nm")
        rep.add(f"kappa_avg_{tag}", res.kappa_avg, "1/K", res.kappa_uncertainty)
        rep.add(f"dn_over_n_{tag}", res.dn_over_n, "1", res.dn_over_n_uncertainty)
    rep.add("strain_warmup", thermo.strain_from_shift(m.warmup_shift, m.lambda_room, params.photoelastic_coefficient), "1")

    derived = cavity.derive(cfg.cavity)
    rep.add("model_center_wavelength", derived.center_wavelength * 1e9, "nm")
    rep.add("model_finesse", derived.finesse, "1")
    rep.add("model_Q", derived.q_factor, "1")

    if sweep:
        scans, fits, failures, curve, level = band_sweep(cfg)
        peak = specfit.extract_peak_report(curve, fsr)
        rep.add("sweep_fits", len(fits), "count")
        rep.add("sweep_failures", len(failures), "count")
        rep.add("sweep_center_wavelength", peak.center_wavelength * 1e9, "nm", peak.wavelength_uncertainty * 1e9)
        rep.add("sweep_finesse_max", peak.finesse, "1", peak.finesse_stderr)
        rep.add("sweep_Q", peak.q_factor, "1")
        rep.add("sweep_peak_over_tc", peak.peak_transmission, "1")
        if figures and out_dir is not None:
            _figures(cfg, Path(out_dir), scans, fits, curve, level, peak)

    rep.wall_time = time.perf_counter() - t0
    return rep


def _figures(cfg, out_dir: Path, scans, fits, curve, level, peak):
    from . import plotting

    conf = cfg.cavity
    best = min(range(len(fits)), key=lambda i: abs(fits[i].center - peak.center_frequency))
    fit = fits[best]
    scan = next(s for s in scans if s.frequency[0] <= fit.center <= s.frequency[-1])
    plotting.plot_fsr_scan(scan, fit, out_dir / "fsr_scan.svg")
    lam_c = peak.center_wavelength
    nu = np.linspace(C_LIGHT / (lam_c + 0.2e-9), C_LIGHT / (lam_c - 0.2e-9), 40000)
    band = cavity.composite_spectrum(conf, nu)
    band = SpectrumScan(band.frequency, band.transmission / level, normalization="off_band_normalized")
    plotting.plot_band(band, curve, peak.center_frequency, out_dir / "band_finesse.svg")
