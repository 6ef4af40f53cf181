"""Airy-function analysis of transmission scans.

Pipeline: normalize to the off-band level, detect resonances to seed a fit,
fit the five-parameter Airy model by Levenberg-damped Gauss-Newton, then
aggregate repeated fits into finesse versus frequency.

The fitted model is::

    T(nu) = baseline + amplitude / (1 + (2F/pi)^2 sin^2(pi (nu - center) / FSR))

Internally finesse and FSR are fitted as logarithms so they stay positive,
and the center is fitted in units of the seed FSR relative to the seed
center to keep all parameters O(1).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal
from scipy.constants import c as C_LIGHT

from .cavity import q_factor
from .errors import DegenerateBaselineError, FitFailure, NumericalError, ValidationError, WindowError
from .spectrum import SpectrumScan

log = logging.getLogger(__name__)

PARAM_NAMES = ("finesse", "fsr", "center", "amplitude", "baseline")


def normalize_off_band(scan: SpectrumScan, baseline_window, reference: SpectrumScan | None = None) -> SpectrumScan:
    """Divide by the median transmission inside ``baseline_window`` (Hz).

    The window is taken from ``reference`` when given (e.g. a separate scan
    recorded outside the stop band), otherwise from ``scan`` itself.
    """
    src = scan if reference is None else reference
    lo, hi = baseline_window
    mask = (src.frequency >= lo) & (src.frequency <= hi)
    if mask.sum() < 8:
        raise WindowError(f"baseline window [{lo:g}, {hi:g}] Hz holds {int(mask.sum())} samples, need >= 8")
    level = float(np.median(src.transmission[mask]))
    if not level > 0:
        raise DegenerateBaselineError(f"off-band median {level!r} is not positive")
    sigma = None if scan.sigma is None else scan.sigma / level
    meta = dict(scan.meta, off_band_level=level)
    return scan.with_transmission(scan.transmission / level, sigma=sigma, normalization="off_band_normalized", meta=meta)


@dataclass(frozen=True)
class Resonance:
    center: float
    height: float
    fwhm: float


def detect_resonances(scan: SpectrumScan, min_prominence: float) -> list[Resonance]:
    """Local maxima with prominence >= ``min_prominence``.

    FWHM comes from linear interpolation of the crossings at half the
    prominence below each peak.
    """
    t = scan.transmission
    peaks, props = signal.find_peaks(t, prominence=min_prominence)
    if peaks.size == 0:
        return []
    widths, _, left, right = signal.peak_widths(t, peaks, rel_height=0.5, prominence_data=(
        props["prominences"], props["left_bases"], props["right_bases"]))
    idx = np.arange(t.size, dtype=float)
    nu_left = np.interp(left, idx, scan.frequency)
    nu_right = np.interp(right, idx, scan.frequency)
    out = [
        Resonance(float(scan.frequency[p]), float(t[p]), float(r - l))
        for p, l, r in zip(peaks, nu_left, nu_right)
    ]
    return sorted(out, key=lambda r: r.center)


@dataclass(frozen=True)
class AirySeed:
    finesse: float
    fsr: float
    center: float
    amplitude: float
    baseline: float = 0.0

    def __post_init__(self):
        if not (self.finesse > 0 and self.fsr > 0):
            raise ValidationError("seed finesse and FSR must be positive")


def airy_model(nu, finesse: float, fsr: float, center: float, amplitude: float, baseline: float):
    phase = math.pi * (np.asarray(nu, dtype=float) - center) / fsr
    return baseline + amplitude / (1.0 + (2.0 * finesse / math.pi) ** 2 * np.sin(phase) ** 2)


class _Problem:
    """Internal parameterization p = (log F, log FSR, x, amplitude, baseline), center = ref + x * unit."""

    def __init__(self, scan: SpectrumScan, seed: AirySeed):
        self.nu = scan.frequency
        self.y = scan.transmission
        self.w = None if scan.sigma is None else 1.0 / scan.sigma
        self.ref = seed.center
        self.unit = seed.fsr
        self.offset = self.nu - self.ref

    def to_internal(self, seed: AirySeed) -> np.ndarray:
        return np.array([math.log(seed.finesse), math.log(seed.fsr), (seed.center - self.ref) / self.unit,
                         seed.amplitude, seed.baseline])

    def physical(self, p) -> tuple[float, float, float, float, float]:
        return (math.exp(p[0]), math.exp(p[1]), self.ref + p[2] * self.unit, p[3], p[4])

    def _parts(self, p):
        f, fsr = math.exp(p[0]), math.exp(p[1])
        phase = math.pi * (self.offset - p[2] * self.unit) / fsr
        k = (2.0 * f / math.pi) ** 2
        s = np.sin(phase)
        d = 1.0 + k * s * s
        return fsr, phase, k, s, d

    def model(self, p):
        _, _, _, _, d = self._parts(p)
        return p[4] + p[3] / d

    def residual(self, p):
        r = self.model(p) - self.y
        return r if self.w is None else r * self.w

    def jacobian(self, p):
        fsr, phase, k, s, d = self._parts(p)
        amp = p[3]
        g = amp / (d * d)
        sin2 = np.sin(2.0 * phase)
        jac = np.empty((self.nu.size, 5))
        jac[:, 0] = -g * s * s * 2.0 * k
        jac[:, 1] = g * k * sin2 * phase
        jac[:, 2] = g * k * sin2 * math.pi * self.unit / fsr
        jac[:, 3] = 1.0 / d
        jac[:, 4] = 1.0
        return jac if self.w is None else jac * self.w[:, None]

    def jacobian_fd(self, p, rel=1e-6):
        jac = np.empty((self.nu.size, 5))
        for i in range(5):
            # log-parameters and the centre offset are already relative coordinates
            h = rel if i < 3 else rel * max(abs(p[i]), 1.0)
            # five-point stencil keeps truncation error small on narrow seeds
            r = []
            for k in (2.0, 1.0, -1.0, -2.0):
                q = p.copy()
                q[i] += k * h
                r.append(self.residual(q))
            jac[:, i] = (-r[0] + 8.0 * r[1] - 8.0 * r[2] + r[3]) / (12.0 * h)
        return jac


def jacobian_deviation(scan: SpectrumScan, seed: AirySeed, params=None) -> float:
    """Max column-scaled deviation between analytic and central-difference Jacobians.

    ``params`` (physical F, FSR, center, amplitude, baseline) defaults to the seed.
    """
    prob = _Problem(scan, seed)
    p = prob.to_internal(seed if params is None else AirySeed(*params))
    ja, jn = prob.jacobian(p), prob.jacobian_fd(p)
    scale = np.maximum(np.abs(ja).max(axis=0), 1e-300)
    return float((np.abs(ja - jn).max(axis=0) / scale).max())


@dataclass(frozen=True)
class AiryFit:
    finesse: float
    fsr: float
    center: float
    amplitude: float
    baseline: float
    covariance: np.ndarray
    residual_rms: float
    n_iterations: int
    jacobian_deviation: float = 0.0
    residuals: np.ndarray = field(default=None, repr=False)
    frequency: np.ndarray = field(default=None, repr=False)
    history: tuple = field(default=(), repr=False)

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    @property
    def finesse_stderr(self) -> float:
        return float(self.stderr[0])

    @property
    def peak_transmission(self) -> float:
        return self.amplitude + self.baseline

    @property
    def linewidth(self) -> float:
        return self.fsr / self.finesse

    def params(self) -> tuple[float, float, float, float, float]:
        return (self.finesse, self.fsr, self.center, self.amplitude, self.baseline)


def fit_airy(
    scan: SpectrumScan,
    seed: AirySeed,
    *,
    max_iter: int = 200,
    xtol: float = 1e-10,
    jac_tol: float = 1e-5,
) -> AiryFit:
    """Weighted least-squares Airy fit by damped Gauss-Newton.

    Damping follows the Marquardt schedule (lambda / 10 on an accepted
    step, x 10 on a rejected one) with diagonal scaling. Converges when
    every internal parameter moves by less than ``xtol`` relative, or
    raises FitFailure after ``max_iter`` iterations.
    """
    prob = _Problem(scan, seed)
    p = prob.to_internal(seed)
    if not np.all(np.isfinite(p)):
        raise ValidationError("seed parameters must be finite")
    jdev = float(np.max(
        np.abs(prob.jacobian(p) - prob.jacobian_fd(p)).max(axis=0)
        / np.maximum(np.abs(prob.jacobian(p)).max(axis=0), 1e-300)
    ))
    if jdev > jac_tol:
        raise NumericalError(f"analytic Jacobian deviates from finite differences by {jdev:.3g}")

    r = prob.residual(p)
    cost = float(r @ r)
    history = [cost]
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        jac = prob.jacobian(p)
        jtj = jac.T @ jac
        grad = jac.T @ r
        diag = np.maximum(np.diag(jtj), 1e-300)
        accepted = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(jtj + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            p_new = p + step
            r_new = prob.residual(p_new)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            # no descent direction left at working precision: already at the minimum
            converged = cost <= history[0]
            break
        small = np.all(np.abs(step) <= xtol * np.maximum(np.abs(p), 1.0))
        p, r, cost = p_new, r_new, cost_new
        history.append(cost)
        lam = max(lam / 10.0, 1e-12)
        if small or cost == 0.0:
            converged = True
            break
    if not converged:
        raise FitFailure(
            f"Airy fit did not converge in {max_iter} iterations (cost {cost:.6g})",
            last_params=prob.physical(p), history=history,
        )

    f, fsr, center, amp, base = prob.physical(p)
    # report the resonance closest to the middle of the scan window
    mid = 0.5 * (scan.frequency[0] + scan.frequency[-1])
    center = center + round((mid - center) / fsr) * fsr

    jac = prob.jacobian(p)
    n, m = jac.shape
    try:
        cov_int = np.linalg.inv(jac.T @ jac)
    except np.linalg.LinAlgError:
        cov_int = np.linalg.pinv(jac.T @ jac)
    if scan.sigma is None:
        cov_int = cov_int * (cost / max(n - m, 1))
    scale = np.diag([f, fsr, prob.unit, 1.0, 1.0])
    cov = scale @ cov_int @ scale
    cov = 0.5 * (cov + cov.T)

    raw_resid = prob.model(p) - prob.y
    return AiryFit(
        finesse=f, fsr=fsr, center=center, amplitude=amp, baseline=base,
        covariance=cov, residual_rms=float(np.sqrt(np.mean(raw_resid**2))),
        n_iterations=it, jacobian_deviation=jdev,
        residuals=raw_resid, frequency=scan.frequency, history=tuple(history),
    )


def seed_from_scan(scan: SpectrumScan, fsr: float | None = None, min_prominence: float | None = None) -> AirySeed:
    """Initial parameters from the most prominent resonance.

    Without ``fsr`` the spacing of the two strongest peaks is used, which
    needs at least two resonances in the window.
    """
    t = scan.transmission
    base = float(np.percentile(t, 5))
    if min_prominence is None:
        min_prominence = 0.25 * (float(t.max()) - base)
    peaks = detect_resonances(scan, min_prominence)
    if not peaks:
        raise FitFailure("no resonance found to seed the fit")
    best = max(peaks, key=lambda r: r.height)
    if fsr is None:
        if len(peaks) < 2:
            raise ValidationError("FSR hint required when the window holds a single resonance")
        top = sorted(sorted(peaks, key=lambda r: r.height)[-2:], key=lambda r: r.center)
        fsr = top[1].center - top[0].center
    fwhm = best.fwhm if best.fwhm > 0 else 2.0 * float(np.diff(scan.frequency).mean())
    return AirySeed(finesse=max(fsr / fwhm, 0.5), fsr=fsr, center=best.center,
                    amplitude=best.height - base, baseline=base)


def fit_scan(scan: SpectrumScan, fsr: float | None = None, **kwargs) -> AiryFit:
    return fit_airy(scan, seed_from_scan(scan, fsr), **kwargs)


@dataclass(frozen=True)
class FinessePoint:
    center: float
    finesse: float
    stderr: float
    std: float
    peak_transmission: float
    count: int


@dataclass(frozen=True)
class FinesseCurve:
    points: tuple[FinessePoint, ...] = ()

    def __len__(self):
        return len(self.points)

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: np.array([getattr(p, name) for p in self.points])
                for name in ("center", "finesse", "stderr", "std", "peak_transmission", "count")}


def _mean_std(values):
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def finesse_vs_frequency(fits, bin_width: float) -> FinesseCurve:
    """Average repeated fits grouped by resonance frequency.

    Fits are sorted by center; a new bin opens when a center lies
    ``bin_width`` or more above the first member of the current bin. Sums
    use exact summation, so the curve does not depend on input order.
    """
    fits = sorted(fits, key=lambda f: (f.center, f.finesse))
    if not fits:
        return FinesseCurve()
    if not bin_width > 0:
        raise ValidationError("bin width must be positive")
    groups: list[list[AiryFit]] = [[fits[0]]]
    for fit in fits[1:]:
        if fit.center - groups[-1][0].center >= bin_width:
            groups.append([fit])
        else:
            groups[-1].append(fit)
    points = []
    for members in groups:
        f_mean, f_std = _mean_std([m.finesse for m in members])
        center, _ = _mean_std([m.center for m in members])
        peak, _ = _mean_std([m.peak_transmission for m in members])
        n = len(members)
        points.append(FinessePoint(center, f_mean, f_std / math.sqrt(n), f_std, peak, n))
    return FinesseCurve(tuple(points))


@dataclass(frozen=True)
class PeakReport:
    center_frequency: float
    center_wavelength: float
    wavelength_uncertainty: float
    finesse: float
    finesse_stderr: float
    finesse_std: float
    q_factor: float
    peak_transmission: float


def extract_peak_report(curve: FinesseCurve, fsr: float) -> PeakReport:
    """Maximum-finesse point; lowest frequency wins ties.

    The wavelength uncertainty is one FSR expressed in wavelength.
    """
    if not curve.points:
        raise ValidationError("finesse curve is empty")
    best = curve.points[0]
    for p in curve.points[1:]:
        if p.finesse > best.finesse:
            best = p
    lam = C_LIGHT / best.center
    return PeakReport(
        center_frequency=best.center,
        center_wavelength=lam,
        wavelength_uncertainty=lam * lam * fsr / C_LIGHT,
        finesse=best.finesse,
        finesse_stderr=best.stderr,
        finesse_std=best.std,
        q_factor=q_factor(best.finesse, fsr, best.center),
        peak_transmission=best.peak_transmission,
    )


def fit_many(scans, fsr: float | None = None, **kwargs) -> tuple[list[AiryFit], list[tuple[int, Exception]]]:
    """Fit each scan independently; failures are collected, not raised."""
    fits, failures = [], []
    for i, scan in enumerate(scans):
        try:
            fits.append(fit_scan(scan, fsr, **kwargs))
        except (FitFailure, NumericalError, ValidationError) as exc:
            log.debug("scan %d (%s): fit failed: %s", i, scan.label, exc)
            failures.append((i, exc))
    return fits, failures
