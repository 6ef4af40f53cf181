"""Command line interface.

Every numeric result is printed as ``name = value [± uncertainty] [unit]``;
dimensionless quantities carry the unit ``[1]``. Exit status is 0 on
success, 2 for invalid input and 3 when a numerical method fails.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np
from scipy.constants import c as C_LIGHT

from . import cavity, cqed, fibermode, formats, reproduce, scanforge, specfit, thermo
from .config import CONFIG_ENV, DEBYE, load_config
from .errors import NumericalError, ValidationError
from .formats import Quantity, RunReport
from .spectrum import SpectrumScan

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3

log = logging.getLogger("nanocav")


def format_quantity(q: Quantity) -> str:
    text = f"{q.name} = {q.value:.8g}"
    if q.uncertainty is not None:
        text += f" ± {q.uncertainty:.3g}"
    return f"{text} [{q.unit}]"


def emit(report: RunReport, out=None) -> None:
    out = out or sys.stdout
    for q in report.outputs:
        print(format_quantity(q), file=out)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nanocav", description="Nanofiber FBG cavity toolkit.")
    p.add_argument("--config", help=f"config file (default: ${CONFIG_ENV}, then built-in defaults)")
    p.add_argument("--report-json", metavar="PATH", help="also write the run report as JSON")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("modes", help="solve the HE11 mode over a wavelength grid")
    s.add_argument("--diameter-nm", type=float)
    s.add_argument("--wl-min-nm", type=float, default=700.0)
    s.add_argument("--wl-max-nm", type=float, default=1000.0)
    s.add_argument("--points", type=int, default=7)
    s.add_argument("--table", metavar="PATH", help="write wavelength_nm n_eff a_eff_surf_um2 table")
    s.add_argument("--plot", metavar="PATH", help="write an SVG of n_eff and A_eff,surf")

    s = sub.add_parser("cavity", help="derived cavity figures and forward spectrum")
    s.add_argument("--spectrum", metavar="PATH", help="write the composite spectrum as a scan file")
    s.add_argument("--span-nm", type=float, default=0.4, help="spectrum span around the centre")
    s.add_argument("--points", type=int, default=20001)

    s = sub.add_parser("invert", help="finesse and peak transmission to R and T_c")
    s.add_argument("--finesse", type=float, required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--peak", type=float, help="measured T_peak / T_c")
    g.add_argument("--tc-unity", action="store_true", help="assume lossless nanofiber, T_c = 1")

    s = sub.add_parser("simulate", help="one synthetic scan around a resonance")
    s.add_argument("output", help="scan file to write")
    s.add_argument("--center-ghz", type=float, help="window centre (default: resonance nearest band centre)")
    s.add_argument("--span-fsr", type=float, default=2.2)
    s.add_argument("--points", type=int, default=800)
    _noise_args(s)

    s = sub.add_parser("sweep", help="synthetic scans stepped across the stop band")
    s.add_argument("outdir", help="directory for scan files")
    s.add_argument("--half-width-nm", type=float, default=0.1)
    s.add_argument("--stride", type=int, default=4)
    s.add_argument("--repeats", type=int, default=3)
    s.add_argument("--points", type=int, default=800)
    s.add_argument("--raw", action="store_true", help="skip off-band normalization")
    _noise_args(s)

    s = sub.add_parser("fit", help="Airy fits of scan files; finesse curve for several")
    s.add_argument("files", nargs="+")
    s.add_argument("--fsr-ghz", type=float, help="FSR seed (default: config)")
    s.add_argument("--bin-fsr", type=float, default=2.0, help="finesse-curve bin width in FSR")
    s.add_argument("--plot-dir", metavar="DIR", help="write SVG figures here")

    s = sub.add_parser("cqed", help="Purcell factor, cooperativity, channeling")
    s.add_argument("--q", type=float, help="quality factor (default: from the configured cavity)")
    s.add_argument("--v-lambda3", type=float, help="mode volume in lambda^3 (default: solved mode)")
    s.add_argument("--eta", type=float)
    s.add_argument("--p-tof", type=float)
    s.add_argument("--dipole-debye", type=float)

    s = sub.add_parser("thermo", help="thermo-optic coefficient from a cooldown shift")
    s.add_argument("--file", help="two rows 'temperature_K wavelength_m'")
    s.add_argument("--li", type=float, help="initial wavelength (m)")
    s.add_argument("--lf", type=float, help="final wavelength (m)")
    s.add_argument("--ti", type=float, help="initial temperature (K)")
    s.add_argument("--tf", type=float, help="final temperature (K)")
    s.add_argument("--sigma-lambda", type=float, default=0.0, help="per-endpoint wavelength error (m)")
    s.add_argument("--sigma-shift", type=float, help="error of the shift itself (m)")
    s.add_argument("--strain-shift", type=float, help="also convert this shift (m) to axial strain")

    s = sub.add_parser("report", help="full pipeline; writes report.json, report.tsv and figures")
    s.add_argument("--out-dir", help="output directory (default: config [output] directory)")
    s.add_argument("--no-figures", action="store_true")
    s.add_argument("--no-sweep", action="store_true")
    return p


def _noise_args(s):
    s.add_argument("--sigma", type=float, help="detector noise std (default: config)")
    s.add_argument("--jitter", type=float, help="relative frequency jitter (default: config)")
    s.add_argument("--seed", type=int, help="noise seed (default: config)")


def _noise(cfg, args) -> scanforge.NoiseModel:
    n = cfg.noise
    return scanforge.NoiseModel(
        n.detector_sigma if args.sigma is None else args.sigma,
        n.frequency_jitter_rel if args.jitter is None else args.jitter,
        n.seed if args.seed is None else args.seed,
    )


def cmd_modes(cfg, args, rep):
    fiber = cfg.fiber
    if args.diameter_nm is not None:
        fiber = fibermode.FiberGeometry(args.diameter_nm * 0.5e-9, fiber.core_index_model, fiber.cladding_index)
    if args.points < 1 or not args.wl_max_nm >= args.wl_min_nm:
        raise ValidationError("need points >= 1 and wl-max >= wl-min")
    cutoff = fibermode.single_mode_cutoff(fiber)
    rep.add("diameter", fiber.diameter * 1e9, "nm")
    rep.add("single_mode_cutoff", cutoff * 1e9, "nm")
    modes = []
    for wl in np.linspace(args.wl_min_nm, args.wl_max_nm, args.points) * 1e-9:
        m = fibermode.solve_he11(fiber, wl)
        modes.append(m)
        tag = f"{wl * 1e9:.6g}nm"
        rep.add(f"V@{tag}", fibermode.v_number(fiber, wl), "1")
        rep.add(f"n_eff@{tag}", m.n_eff, "1")
        rep.add(f"a_eff_surf@{tag}", m.a_eff_surf * 1e12, "um^2")
    if args.table:
        formats.write_mode_table(modes, args.table)
    if args.plot:
        from . import plotting

        plotting.plot_modes([m.wavelength for m in modes], [m.n_eff for m in modes],
                            [m.a_eff_surf for m in modes], cutoff, args.plot)


def cmd_cavity(cfg, args, rep):
    conf = cfg.cavity
    d = cavity.derive(conf)
    rep.add("finesse", d.finesse, "1")
    rep.add("peak_over_tc", cavity.peak_transmission(
        float(cavity.fbg_reflectivity(conf.mirror_1, d.center_wavelength)),
        float(cavity.fbg_reflectivity(conf.mirror_2, d.center_wavelength)),
        conf.single_pass_transmission) / conf.single_pass_transmission, "1")
    rep.add("Q", d.q_factor, "1")
    rep.add("linewidth", d.linewidth * 1e-6, "MHz")
    rep.add("center_wavelength", d.center_wavelength * 1e9, "nm")
    rep.add("center_frequency", d.center_frequency * 1e-12, "THz")
    rep.add("optical_length", conf.optical_length * 1e3, "mm")
    if args.spectrum:
        half = 0.5 * args.span_nm * 1e-9
        nu = np.linspace(C_LIGHT / (d.center_wavelength + half), C_LIGHT / (d.center_wavelength - half), args.points)
        formats.write_scan_file(cavity.composite_spectrum(conf, nu), args.spectrum)


def cmd_invert(cfg, args, rep):
    if args.tc_unity:
        res = cavity.invert_finesse_transmission(args.finesse, assume_tc_unity=True)
    else:
        res = cavity.invert_finesse_transmission(args.finesse, args.peak)
    rep.add("R", res.reflectivity, "1")
    rep.add("T_c", res.single_pass_transmission, "1")
    rep.add("iterations", res.iterations, "count")


def _band_center(conf):
    lam = cavity.center_wavelength(conf.mirror_1, conf.mirror_2, conf.single_pass_transmission)
    return C_LIGHT / lam


def cmd_simulate(cfg, args, rep):
    conf = cfg.cavity
    fsr = conf.free_spectral_range
    if args.center_ghz is not None:
        nu0 = args.center_ghz * 1e9
    else:
        nu_b = _band_center(conf)
        res = scanforge.resonance_frequencies(conf, nu_b - fsr, nu_b + fsr)
        nu0 = float(res[np.argmin(np.abs(res - nu_b))])
    half = 0.5 * args.span_fsr * fsr
    scan = scanforge.generate_scan(conf, (nu0 - half, nu0 + half), args.points, _noise(cfg, args))
    formats.write_scan_file(scan, args.output)
    rep.add("window_center", nu0 * 1e-12, "THz")
    rep.add("samples", len(scan), "count")


def cmd_sweep(cfg, args, rep):
    noise = _noise(cfg, args)
    conf = cfg.cavity
    out = Path(args.outdir)
    half = args.half_width_nm * 1e-9
    lam_c = C_LIGHT / _band_center(conf)
    scans = scanforge.sweep_band(conf, (lam_c - half, lam_c + half), args.points, args.repeats, noise, stride=args.stride)
    if not args.raw:
        nu_ref = C_LIGHT / (lam_c + 20 * max(half, 0.1e-9))
        ref = scanforge.generate_scan(conf, (nu_ref - 2e9, nu_ref + 2e9), 256, scanforge.member_noise(noise, 10**6, 0),
                                      label="off_band_reference")
        formats.write_scan_file(ref, out / "reference.txt")
        scans = [specfit.normalize_off_band(s, (ref.frequency[0], ref.frequency[-1]), reference=ref) for s in scans]
    width = len(str(len(scans)))
    for i, s in enumerate(scans):
        formats.write_scan_file(s, out / f"scan_{i:0{width}d}.txt")
    rep.add("scans", len(scans), "count")
    rep.add("band_center", lam_c * 1e9, "nm")


def cmd_fit(cfg, args, rep):
    fsr = cfg.cavity.free_spectral_range if args.fsr_ghz is None else args.fsr_ghz * 1e9
    scans = []
    for path in args.files:
        scans.append(formats.read_scan_file(path))
        rep.add_input(path)
    if len(scans) == 1:
        fit = specfit.fit_scan(scans[0], fsr)
        _add_fit(rep, "", fit)
        if args.plot_dir:
            from . import plotting

            plotting.plot_fsr_scan(scans[0], fit, Path(args.plot_dir) / "fsr_scan.svg")
        return
    fits, failures = specfit.fit_many(scans, fsr)
    for idx, exc in failures:
        log.warning("fit failed for %s: %s", args.files[idx], exc)
    if not fits:
        raise NumericalError("no scan could be fitted")
    rep.add("fits", len(fits), "count")
    rep.add("failures", len(failures), "count")
    curve = specfit.finesse_vs_frequency(fits, args.bin_fsr * fsr)
    for pt in curve.points:
        rep.add(f"finesse@{pt.center * 1e-12:.7f}THz", pt.finesse, "1", pt.stderr)
    peak = specfit.extract_peak_report(curve, fsr)
    rep.add("center_frequency", peak.center_frequency * 1e-12, "THz")
    rep.add("center_wavelength", peak.center_wavelength * 1e9, "nm", peak.wavelength_uncertainty * 1e9)
    rep.add("finesse_max", peak.finesse, "1", peak.finesse_stderr)
    rep.add("Q", peak.q_factor, "1")
    rep.add("peak_transmission", peak.peak_transmission, "1")
    if args.plot_dir:
        from . import plotting

        best = min(fits, key=lambda f: abs(f.center - peak.center_frequency))
        scan = next(s for s in scans if s.frequency[0] <= best.center <= s.frequency[-1])
        plotting.plot_fsr_scan(scan, best, Path(args.plot_dir) / "fsr_scan.svg")
        nu = np.concatenate([s.frequency for s in scans])
        t = np.concatenate([s.transmission for s in scans])
        order = np.argsort(nu, kind="stable")
        nu, t = nu[order], t[order]
        keep = np.concatenate([[True], np.diff(nu) > 0])
        merged = SpectrumScan(nu[keep], t[keep], normalization=scans[0].normalization)
        plotting.plot_band(merged, curve, peak.center_frequency, Path(args.plot_dir) / "band_finesse.svg")


def _add_fit(rep, prefix, fit):
    err = fit.stderr
    rep.add(prefix + "finesse", fit.finesse, "1", err[0])
    rep.add(prefix + "fsr", fit.fsr * 1e-9, "GHz", err[1] * 1e-9)
    rep.add(prefix + "center", fit.center * 1e-12, "THz", err[2] * 1e-12)
    rep.add(prefix + "peak_transmission", fit.peak_transmission, "1")
    rep.add(prefix + "linewidth", fit.linewidth * 1e-6, "MHz")
    rep.add(prefix + "residual_rms", fit.residual_rms, "1")
    rep.add(prefix + "jacobian_deviation", fit.jacobian_deviation, "1")


def cmd_cqed(cfg, args, rep):
    lam = cfg.emitter.wavelength
    fsr = cfg.cavity.free_spectral_range
    q = args.q if args.q is not None else cavity.derive(cfg.cavity).q_factor
    if args.v_lambda3 is not None:
        v = args.v_lambda3 * lam**3
    else:
        v = cqed.mode_volume(fibermode.solve_he11(cfg.fiber, lam).a_eff_surf, fsr)
    env = cqed.CouplingEnvironment(q, v, cfg.emitter.eta if args.eta is None else args.eta,
                                   cfg.emitter.p_tof if args.p_tof is None else args.p_tof)
    mu = cfg.emitter.dipole_moment if args.dipole_debye is None else args.dipole_debye * DEBYE
    emitter = None if mu is None else cqed.EmitterParams.two_level(mu, lam)
    fom = cqed.figures_of_merit(env, lam, emitter)
    rep.add("Q", q, "1")
    rep.add("mode_volume", fom["mode_volume_lambda3"], "lambda^3")
    for key in ("purcell_aligned", "purcell_averaged", "cooperativity_aligned", "eta_c_aligned", "eta_c_averaged",
                "eta_threshold_averaged"):
        rep.add(key, fom[key], "1")
    if emitter is not None:
        for key in ("g", "kappa", "gamma0"):
            rep.add(key, fom[key] / (2 * np.pi) * 1e-6, "MHz")
        rep.add("cooperativity", fom["cooperativity"], "1")


def cmd_thermo(cfg, args, rep):
    if args.file:
        meas = formats.read_measurement_file(args.file, args.sigma_lambda, args.sigma_shift)
        rep.add_input(args.file)
    else:
        missing = [f"--{k}" for k in ("li", "lf", "ti", "tf") if getattr(args, k) is None]
        if missing:
            raise ValidationError(f"thermo needs --file or all of --li --lf --ti --tf (missing {' '.join(missing)})")
        meas = thermo.ThermoMeasurement(args.li, args.lf, args.ti, args.tf, args.sigma_lambda, args.sigma_shift)
    res = thermo.extract_thermo_optic(meas, cfg.thermo)
    show_unc = meas.sigma_shift > 0
    rep.add("shift", meas.shift * 1e9, "nm", meas.sigma_shift * 1e9 if show_unc else None)
    rep.add("delta_T", meas.delta_t, "K")
    rep.add("kappa_avg", res.kappa_avg, "1/K", res.kappa_uncertainty if show_unc else None)
    rep.add("dn_over_n", res.dn_over_n, "1", res.dn_over_n_uncertainty if show_unc else None)
    if args.strain_shift is not None:
        rep.add("strain", thermo.strain_from_shift(args.strain_shift, meas.lambda_initial,
                                                   cfg.thermo.photoelastic_coefficient), "1")


def cmd_report(cfg, args, rep):
    out = Path(args.out_dir) if args.out_dir else cfg.output_dir
    full = reproduce.run_report(cfg, out, figures=not args.no_figures, sweep=not args.no_sweep)
    rep.outputs.extend(full.outputs)
    full.write_json(out / "report.json")
    full.write_tsv(out / "report.tsv")


COMMANDS = {
    "modes": cmd_modes,
    "cavity": cmd_cavity,
    "invert": cmd_invert,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "fit": cmd_fit,
    "cqed": cmd_cqed,
    "thermo": cmd_thermo,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    t0 = time.perf_counter()
    try:
        cfg = load_config(args.config)
        rep = RunReport(command=args.command, config=cfg.raw)
        COMMANDS[args.command](cfg, args, rep)
    except (ValidationError, FileNotFoundError) as exc:
        print(f"nanocav {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"nanocav {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    rep.wall_time = time.perf_counter() - t0
    emit(rep)
    if args.report_json:
        rep.write_json(args.report_json)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
