"""Fabry-Perot resonator formed by two fiber Bragg gratings.

Finesse and transmission follow the Airy model of a two-mirror cavity with a
single-pass power transmission ``tc`` between the mirrors::

    F = pi (R1 R2)^(1/4) sqrt(tc) / (1 - tc sqrt(R1 R2))
    T = (1-R1)(1-R2) tc / (1 - tc sqrt(R1 R2))^2 / (1 + (2F/pi)^2 sin^2(delta/2))

Mirror reflectivities may depend on wavelength through a Gaussian or a
uniform-grating (coupled-mode) band model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.constants import c as C_LIGHT

from .errors import DivergentFinesseError, InfeasibleMeasurementError, NoCavityError, ValidationError
from .spectrum import SpectrumScan

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _check_mirrors(r1, r2, tc):
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    if np.any((r1 < 0) | (r1 > 1)) or np.any((r2 < 0) | (r2 > 1)):
        raise ValidationError("mirror reflectivities must lie in [0, 1]")
    if not 0 < tc <= 1:
        raise ValidationError(f"single-pass transmission must lie in (0, 1], got {tc}")
    loop = tc * np.sqrt(r1 * r2)
    if np.any(loop >= 1):
        raise DivergentFinesseError("tc * sqrt(R1 R2) >= 1: lossless round trip, finesse diverges")
    return r1, r2, loop


def finesse(r1, r2, tc: float):
    r1, r2, loop = _check_mirrors(r1, r2, tc)
    out = math.pi * (r1 * r2) ** 0.25 * math.sqrt(tc) / (1.0 - loop)
    return float(out) if out.ndim == 0 else out


def peak_transmission(r1, r2, tc: float):
    """Transmission on resonance (delta = 0)."""
    r1, r2, loop = _check_mirrors(r1, r2, tc)
    out = (1.0 - r1) * (1.0 - r2) * tc / (1.0 - loop) ** 2
    return float(out) if out.ndim == 0 else out


def transmission(r1, r2, tc: float, delta):
    """Airy transmission at round-trip phase ``delta`` (rad)."""
    f = np.asarray(finesse(r1, r2, tc))
    t0 = np.asarray(peak_transmission(r1, r2, tc))
    out = t0 / (1.0 + (2.0 * f / math.pi) ** 2 * np.sin(np.asarray(delta) / 2.0) ** 2)
    return float(out) if np.ndim(out) == 0 else out


def q_factor(f: float, fsr: float, nu_c: float) -> float:
    """Q = nu_c F / FSR."""
    if not (f > 0 and fsr > 0 and nu_c > 0):
        raise ValidationError("finesse, FSR and resonance frequency must be positive")
    return nu_c * f / fsr


@dataclass(frozen=True)
class InversionResult:
    reflectivity: float
    single_pass_transmission: float
    iterations: int
    method: str


def _equal_mirror_forward(r, tc):
    loop = tc * r
    f = math.pi * math.sqrt(loop) / (1.0 - loop)
    p = (1.0 - r) ** 2 / (1.0 - loop) ** 2
    return f, p


def _equal_mirror_jacobian(r, tc):
    loop = tc * r
    d = 1.0 - loop
    # F = pi sqrt(x)/(1-x), x = r tc
    df_dx = math.pi * (1.0 + loop) / (2.0 * math.sqrt(loop) * d * d)
    # P = (1-r)^2/(1-r tc)^2
    dp_dr = -2.0 * (1.0 - r) / d**2 + 2.0 * (1.0 - r) ** 2 * tc / d**3
    dp_dtc = 2.0 * (1.0 - r) ** 2 * r / d**3
    return np.array([[df_dx * tc, df_dx * r], [dp_dr, dp_dtc]])


def _newton(f_meas, p_meas, r, tc, max_iter=100):
    """Damped Newton on relative residuals; returns (r, tc, iterations, converged)."""
    target = np.array([f_meas, p_meas])

    def resid(r_, tc_):
        return np.array(_equal_mirror_forward(r_, tc_)) / target - 1.0

    res = resid(r, tc)
    norm = np.linalg.norm(res)
    for it in range(1, max_iter + 1):
        jac = _equal_mirror_jacobian(r, tc) / target[:, None]
        try:
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            return r, tc, it, False
        lam = 1.0
        while lam > 1e-12:
            r_new, tc_new = r + lam * step[0], tc + lam * step[1]
            if 0 < r_new < 1 and 0 < tc_new <= 1 + 1e-12 and tc_new * r_new < 1:
                res_new = resid(r_new, tc_new)
                norm_new = np.linalg.norm(res_new)
                if norm_new < norm or norm_new < 1e-15:
                    break
            lam *= 0.5
        else:
            return r, tc, it, norm < 1e-13
        small = abs(r_new - r) <= 1e-16 * max(1.0, r) and abs(tc_new - tc) <= 1e-16 * max(1.0, tc)
        r, tc, res, norm = r_new, tc_new, res_new, norm_new
        if norm < 1e-15 or small:
            return r, tc, it, norm < 1e-12
    return r, tc, max_iter, norm < 1e-12


def invert_finesse_transmission(
    f_meas: float,
    t_peak_over_tc: float | None = None,
    *,
    assume_tc_unity: bool = False,
    grid_size: int = 100,
) -> InversionResult:
    """Mirror reflectivity R (= R1 = R2) and single-pass transmission from measurements.

    With ``assume_tc_unity`` only the finesse is used and tc is fixed at 1.
    Otherwise the on-resonance transmission, normalized to the off-band
    level (i.e. T/tc), closes the system. The 2-D problem is seeded from a
    ``grid_size``^2 scan of (0, 1]^2 and polished by damped Newton; if Newton
    stalls, a refined brute-force grid search is used instead.
    """
    if not f_meas > 0:
        raise ValidationError(f"measured finesse must be positive, got {f_meas}")
    if assume_tc_unity:
        g = lambda r: math.pi * math.sqrt(r) / (1.0 - r) - f_meas  # noqa: E731
        r = optimize.brentq(g, 1e-300, 1.0 - 1e-16, xtol=1e-300, rtol=4 * np.finfo(float).eps)
        return InversionResult(r, 1.0, 0, "brentq")
    if t_peak_over_tc is None:
        raise ValidationError("peak transmission is required unless tc is assumed to be 1")
    if not 0 < t_peak_over_tc <= 1:
        raise InfeasibleMeasurementError(
            f"normalized peak transmission {t_peak_over_tc} must lie in (0, 1]"
        )

    target = np.array([f_meas, t_peak_over_tc])
    axis = (np.arange(grid_size) + 0.5) / grid_size
    rr, tt = np.meshgrid(axis, axis, indexing="ij")
    loop = rr * tt
    ff = math.pi * np.sqrt(loop) / (1.0 - loop)
    pp = (1.0 - rr) ** 2 / (1.0 - loop) ** 2
    cost = (ff / target[0] - 1.0) ** 2 + (pp / target[1] - 1.0) ** 2
    i, j = np.unravel_index(np.argmin(cost), cost.shape)
    r, tc, iters, ok = _newton(f_meas, t_peak_over_tc, rr[i, j], tt[i, j])
    method = "newton"
    if not ok:
        r, tc = _grid_fallback(target)
        r, tc, extra, ok = _newton(f_meas, t_peak_over_tc, r, tc)
        iters += extra
        method = "grid+newton"
    f_chk, p_chk = _equal_mirror_forward(r, min(tc, 1.0))
    if not ok or abs(f_chk / f_meas - 1) > 1e-9 or abs(p_chk / t_peak_over_tc - 1) > 1e-9:
        raise InfeasibleMeasurementError(
            f"no (R, tc) in (0,1]^2 reproduces F = {f_meas}, T/tc = {t_peak_over_tc}"
        )
    return InversionResult(float(r), float(min(tc, 1.0)), iters, method)


def _grid_fallback(target, levels=6, n=201):
    lo_r, hi_r, lo_t, hi_t = 1e-6, 1 - 1e-9, 1e-6, 1.0
    best = (0.5, 0.5)
    for _ in range(levels):
        rr, tt = np.meshgrid(np.linspace(lo_r, hi_r, n), np.linspace(lo_t, hi_t, n), indexing="ij")
        loop = rr * tt
        ok = loop < 1
        loop = np.where(ok, loop, 0.5)
        ff = math.pi * np.sqrt(loop) / (1.0 - loop)
        pp = (1.0 - rr) ** 2 / (1.0 - loop) ** 2
        cost = np.where(ok, (ff / target[0] - 1.0) ** 2 + (pp / target[1] - 1.0) ** 2, np.inf)
        i, j = np.unravel_index(np.argmin(cost), cost.shape)
        best = (rr[i, j], tt[i, j])
        dr, dt = 4 * (hi_r - lo_r) / (n - 1), 4 * (hi_t - lo_t) / (n - 1)
        lo_r, hi_r = max(1e-12, best[0] - dr), min(1 - 1e-15, best[0] + dr)
        lo_t, hi_t = max(1e-12, best[1] - dt), min(1.0, best[1] + dt)
    return best


# -- mirrors --------------------------------------------------------------


@dataclass(frozen=True)
class GaussianBand:
    hwhm: float

    def __post_init__(self):
        if not self.hwhm > 0:
            raise ValidationError("Gaussian band HWHM must be positive")


@dataclass(frozen=True)
class CoupledModeBand:
    """Uniform grating: coupling ``kappa`` (1/m), length ``grating_length`` (m)."""

    kappa: float
    grating_length: float
    effective_index: float = 1.45

    def __post_init__(self):
        if not (self.kappa > 0 and self.grating_length > 0 and self.effective_index > 0):
            raise ValidationError("coupled-mode band needs positive kappa, length and effective index")

    @property
    def peak(self) -> float:
        return math.tanh(self.kappa * self.grating_length) ** 2

    @classmethod
    def for_peak(cls, peak_reflectivity: float, grating_length: float, effective_index: float = 1.45):
        kappa = math.atanh(math.sqrt(peak_reflectivity)) / grating_length
        return cls(kappa, grating_length, effective_index)


@dataclass(frozen=True)
class FbgMirror:
    bragg_wavelength: float
    peak_reflectivity: float
    band_model: GaussianBand | CoupledModeBand = field(default_factory=lambda: GaussianBand(0.1e-9))

    def __post_init__(self):
        if not self.bragg_wavelength > 0:
            raise ValidationError("Bragg wavelength must be positive")
        if not 0 <= self.peak_reflectivity <= 1:
            raise ValidationError("peak reflectivity must lie in [0, 1]")
        if isinstance(self.band_model, CoupledModeBand):
            if abs(self.band_model.peak - self.peak_reflectivity) > 1e-9:
                raise ValidationError(
                    f"coupled-mode peak tanh^2(kappa L) = {self.band_model.peak:.12g} "
                    f"disagrees with peak_reflectivity {self.peak_reflectivity}"
                )

    @classmethod
    def coupled_mode(cls, bragg_wavelength, kappa, grating_length, effective_index=1.45):
        band = CoupledModeBand(kappa, grating_length, effective_index)
        return cls(bragg_wavelength, band.peak, band)


def fbg_reflectivity(mirror: FbgMirror, wavelength):
    """Power reflectivity of ``mirror`` at ``wavelength`` (m)."""
    lam = np.asarray(wavelength, dtype=float)
    band = mirror.band_model
    if isinstance(band, GaussianBand):
        x = (lam - mirror.bragg_wavelength) / band.hwhm
        out = mirror.peak_reflectivity * np.exp(-math.log(2.0) * x * x)
    else:
        out = _uniform_grating(band, mirror.bragg_wavelength, lam)
    return float(out) if out.ndim == 0 else out


def _uniform_grating(band: CoupledModeBand, bragg, lam):
    kappa, length = band.kappa, band.grating_length
    sigma = 2.0 * math.pi * band.effective_index * (1.0 / lam - 1.0 / bragg)
    s2 = kappa * kappa - sigma * sigma
    s = np.sqrt(np.abs(s2))
    sl = s * length
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        # sinh(sL)/s and cosh(sL), continued through s = 0 into the oscillatory branch
        sh = np.where(s2 > 0, np.sinh(sl) / np.where(s > 0, s, 1.0), np.sin(sl) / np.where(s > 0, s, 1.0))
        ch = np.where(s2 > 0, np.cosh(sl), np.cos(sl))
    sh = np.where(s == 0, length, sh)
    ch = np.where(s == 0, 1.0, ch)
    r = kappa * kappa * sh * sh / (ch * ch + sigma * sigma * sh * sh)
    # overflow guard for very strong gratings: R -> tanh^2 -> 1
    return np.where(np.isfinite(r), r, 1.0)


def center_wavelength(m1: FbgMirror, m2: FbgMirror, tc: float = 1.0, *, tol: float = 1e-16) -> float:
    """Wavelength of maximum finesse between the two Bragg wavelengths.

    Found by golden-section search; identical bands return their common
    centre directly.
    """
    a, b = sorted((m1.bragg_wavelength, m2.bragg_wavelength))

    def neg_f(lam):
        return -finesse(fbg_reflectivity(m1, lam), fbg_reflectivity(m2, lam), tc)

    if a == b:
        lam = a
    else:
        x1 = b - GOLDEN * (b - a)
        x2 = a + GOLDEN * (b - a)
        f1, f2 = neg_f(x1), neg_f(x2)
        while b - a > tol:
            if f1 < f2:
                b, x2, f2 = x2, x1, f1
                x1 = b - GOLDEN * (b - a)
                f1 = neg_f(x1)
            else:
                a, x1, f1 = x1, x2, f2
                x2 = a + GOLDEN * (b - a)
                f2 = neg_f(x2)
        lam = 0.5 * (a + b)
    if fbg_reflectivity(m1, lam) * fbg_reflectivity(m2, lam) < 1e-9:
        raise NoCavityError("reflection bands do not overlap; no cavity is formed")
    return lam


@dataclass(frozen=True)
class CavityConfig:
    mirror_1: FbgMirror
    mirror_2: FbgMirror
    single_pass_transmission: float
    free_spectral_range: float
    phase_offset: float = 0.0

    def __post_init__(self):
        if not 0 < self.single_pass_transmission <= 1:
            raise ValidationError("single-pass transmission must lie in (0, 1]")
        if not self.free_spectral_range > 0:
            raise ValidationError("free spectral range must be positive")

    @property
    def optical_length(self) -> float:
        """c / (2 FSR)."""
        return C_LIGHT / (2.0 * self.free_spectral_range)


@dataclass(frozen=True)
class CavityDerived:
    finesse: float
    q_factor: float
    linewidth: float
    center_wavelength: float

    @property
    def center_frequency(self) -> float:
        return C_LIGHT / self.center_wavelength


def derive(config: CavityConfig) -> CavityDerived:
    """Finesse, Q and linewidth at the point of best band overlap."""
    tc = config.single_pass_transmission
    lam = center_wavelength(config.mirror_1, config.mirror_2, tc)
    f = finesse(fbg_reflectivity(config.mirror_1, lam), fbg_reflectivity(config.mirror_2, lam), tc)
    fsr = config.free_spectral_range
    return CavityDerived(f, q_factor(f, fsr, C_LIGHT / lam), fsr / f, lam)


def round_trip_phase(config: CavityConfig, frequency):
    return 2.0 * math.pi * np.asarray(frequency, dtype=float) / config.free_spectral_range + config.phase_offset


def composite_transmission(config: CavityConfig, frequency) -> np.ndarray:
    """Airy transmission with wavelength-dependent mirrors on a frequency grid (Hz)."""
    nu = np.asarray(frequency, dtype=float)
    lam = C_LIGHT / nu
    r1 = np.atleast_1d(fbg_reflectivity(config.mirror_1, lam))
    r2 = np.atleast_1d(fbg_reflectivity(config.mirror_2, lam))
    return np.asarray(transmission(r1, r2, config.single_pass_transmission, round_trip_phase(config, nu)))


def composite_spectrum(config: CavityConfig, frequency, *, label: str = "composite") -> SpectrumScan:
    nu = np.asarray(frequency, dtype=float)
    if np.any(np.diff(nu) <= 0):
        raise ValidationError("frequency grid must be strictly increasing")
    return SpectrumScan(nu, composite_transmission(config, nu), label=label)
