import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.constants import c as C_LIGHT

from helpers import F_TRUE, FSR, NU_C, flat_mirror_config, measured_band_config, synthetic_scan, window_around_resonance
from nanocav.errors import DegenerateBaselineError, FitFailure, ValidationError, WindowError
from nanocav.scanforge import NoiseModel, generate_scan, sweep_band
from nanocav.specfit import (
    AiryFit,
    AirySeed,
    FinesseCurve,
    FinessePoint,
    airy_model,
    detect_resonances,
    extract_peak_report,
    finesse_vs_frequency,
    fit_airy,
    fit_many,
    fit_scan,
    jacobian_deviation,
    normalize_off_band,
)
from nanocav.spectrum import SpectrumScan


def _scan(t, nu=None, sigma=None):
    t = np.asarray(t, dtype=float)
    nu = np.linspace(1e14, 1e14 + 1e9, t.size) if nu is None else nu
    return SpectrumScan(nu, t, sigma=sigma)


def _fake_fit(center, f, peak=0.14):
    return AiryFit(f, FSR, center, peak, 0.0, np.zeros((5, 5)), 0.0, 1)


def test_normalize_constant():
    s = _scan(np.full(50, 2.0))
    out = normalize_off_band(s, (s.frequency[0], s.frequency[-1]))
    assert np.all(out.transmission == 1.0)
    assert out.normalization == "off_band_normalized"


def test_normalize_peak_value():
    t = np.full(100, 0.5)
    t[50] = 0.07
    s = _scan(t)
    out = normalize_off_band(s, (s.frequency[0], s.frequency[40]))
    assert out.transmission[50] == pytest.approx(0.14, rel=1e-15)


def test_normalize_errors():
    t = np.zeros(50)
    t[40:] = 1.0
    s = _scan(t)
    with pytest.raises(DegenerateBaselineError):
        normalize_off_band(s, (s.frequency[0], s.frequency[20]))
    with pytest.raises(WindowError):
        normalize_off_band(s, (s.frequency[0], s.frequency[3]))


def test_normalize_with_reference_scales_sigma():
    ref = _scan(np.full(20, 0.8))
    s = _scan(np.full(20, 0.4), sigma=np.full(20, 0.08))
    out = normalize_off_band(s, (ref.frequency[0], ref.frequency[-1]), reference=ref)
    assert np.allclose(out.transmission, 0.5)
    assert np.allclose(out.sigma, 0.1)


def test_detect_single_peak():
    nu = np.linspace(-0.5e9, 0.5e9, 2001)
    t = airy_model(nu, 29.4, FSR, 0.0123e9, 0.14, 0.0)
    s = SpectrumScan(nu + 3e14, t)
    peaks = detect_resonances(s, 0.05)
    assert len(peaks) == 1
    step = nu[1] - nu[0]
    assert abs(peaks[0].center - (3e14 + 0.0123e9)) <= step
    assert peaks[0].fwhm == pytest.approx(FSR / 29.4, rel=0.01)


def test_detect_comb_and_flat():
    _, s = synthetic_scan()
    peaks = detect_resonances(s, 0.05)
    assert len(peaks) == 3
    step = s.frequency[1] - s.frequency[0]
    assert np.all(np.abs(np.diff([p.center for p in peaks]) - FSR) <= step)
    assert detect_resonances(_scan(np.ones(100)), 1e-3) == []


def test_noiseless_roundtrip():
    nu0, s = synthetic_scan()
    fit = fit_scan(s, FSR)
    assert fit.finesse == pytest.approx(F_TRUE, rel=1e-6)
    assert fit.fsr == pytest.approx(FSR, rel=1e-9)
    assert fit.center == pytest.approx(nu0, abs=1.0)
    assert fit.residual_rms < 1e-9
    assert fit.jacobian_deviation < 1e-5


def test_truth_seed_converges_fast():
    nu0, s = synthetic_scan()
    first = fit_scan(s, FSR)
    fit = fit_airy(s, AirySeed(*first.params()))
    assert fit.n_iterations <= 2
    assert fit.finesse == pytest.approx(F_TRUE, rel=1e-9)


def test_center_canonicalized():
    nu0, s = synthetic_scan()
    first = fit_scan(s, FSR)
    for k in (-3, 2, 7):
        seed = AirySeed(first.finesse, first.fsr, first.center + k * first.fsr, first.amplitude, first.baseline)
        fit = fit_airy(s, seed)
        assert fit.center == pytest.approx(nu0, abs=1.0)
        assert s.frequency[0] <= fit.center <= s.frequency[-1]


def test_monte_carlo_calibration_small():
    hits = 0
    for seed in range(30):
        _, s = synthetic_scan(sigma=0.01, seed=seed)
        fit = fit_scan(s, FSR)
        hits += abs(fit.finesse - F_TRUE) <= 3 * fit.finesse_stderr
    assert hits >= 27


def test_covariance_properties():
    _, s = synthetic_scan(sigma=0.01, seed=3)
    fit = fit_scan(s, FSR)
    cov = fit.covariance
    assert np.allclose(cov, cov.T)
    assert np.linalg.eigvalsh(cov / np.outer(fit.stderr, fit.stderr)).min() > -1e-10


def test_covariance_scales_inverse_n():
    cfg = flat_mirror_config()
    nu0, win = window_around_resonance(cfg)
    seed = None
    variances = []
    # odd counts put a sample on the resonance; with an even count of 100 the
    # 1.5 samples per linewidth straddle the peak and inflate the variance
    ns = (101, 1001, 10001)
    for n in ns:
        clean = generate_scan(cfg, win, n)
        s = clean.with_transmission(clean.transmission, sigma=np.full(n, 0.01))
        if seed is None:
            seed = AirySeed(*fit_scan(generate_scan(cfg, win, 2000), FSR).params())
        variances.append(fit_airy(s, seed).covariance[0, 0])
    slope = np.polyfit(np.log(ns), np.log(variances), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.1)


def test_jacobian_random_points():
    _, s = synthetic_scan()
    seed = AirySeed(F_TRUE, FSR, NU_C, 0.14, 0.0)
    rng = np.random.default_rng(11)
    for _ in range(20):
        params = (
            rng.uniform(2, 200), FSR * rng.uniform(0.8, 1.2), NU_C + rng.uniform(-0.5, 0.5) * FSR,
            rng.uniform(0.05, 1.0), rng.uniform(-0.1, 0.1),
        )
        assert jacobian_deviation(s, seed, params) < 1e-5


def test_fit_failure_carries_history():
    _, s = synthetic_scan(sigma=0.01, seed=1)
    with pytest.raises(FitFailure) as info:
        fit_airy(s, AirySeed(5.0, 0.7 * FSR, NU_C + 0.3 * FSR, 0.5, 0.0), max_iter=1)
    assert info.value.history
    assert len(info.value.last_params) == 5


def test_seed_validation():
    with pytest.raises(ValidationError):
        AirySeed(-1.0, FSR, NU_C, 0.1)


def test_curve_identical_fits():
    curve = finesse_vs_frequency([_fake_fit(NU_C, 29.4) for _ in range(5)], 2 * FSR)
    assert len(curve) == 1
    assert curve.points[0].finesse == pytest.approx(29.4, rel=1e-15)
    assert curve.points[0].stderr == 0.0


def test_curve_hand_arithmetic():
    curve = finesse_vs_frequency([_fake_fit(NU_C + i, f) for i, f in enumerate((28.0, 29.0, 30.0))], 2 * FSR)
    assert len(curve) == 1
    assert curve.points[0].finesse == pytest.approx(29.0)
    assert curve.points[0].stderr == pytest.approx(1 / math.sqrt(3), abs=5e-4)
    assert curve.points[0].std == pytest.approx(1.0)


def test_curve_empty_and_ordered():
    assert len(finesse_vs_frequency([], FSR)) == 0
    fits = [_fake_fit(NU_C + k * 4 * FSR, 20 + k) for k in (3, 0, 2, 1)]
    curve = finesse_vs_frequency(fits, 2 * FSR)
    centers = curve.arrays()["center"]
    assert np.all(np.diff(centers) > 0)


@settings(max_examples=50)
@given(st.permutations(list(range(12))))
def test_curve_permutation_invariant(order):
    rng = np.random.default_rng(4)
    base = [_fake_fit(NU_C + (i // 3) * 4 * FSR + rng.uniform(-1e6, 1e6), rng.uniform(20, 30)) for i in range(12)]
    ref = finesse_vs_frequency(base, 2 * FSR)
    perm = finesse_vs_frequency([base[i] for i in order], 2 * FSR)
    assert ref == perm


def test_peak_report():
    curve = FinesseCurve((FinessePoint(NU_C, 29.4, 1.3, 2.0, 0.14, 3),))
    rep = extract_peak_report(curve, FSR)
    assert rep.center_wavelength == pytest.approx(851.8944e-9, abs=1e-13)
    assert rep.wavelength_uncertainty == pytest.approx(0.0025e-9, rel=0.02)
    assert rep.q_factor == pytest.approx(9.85e6, rel=1e-3)


def test_peak_report_tie_break():
    pts = tuple(FinessePoint(NU_C + k * 4 * FSR, f, 0.1, 0.1, 0.14, 3) for k, f in enumerate((20.0, 29.4, 29.4)))
    rep = extract_peak_report(FinesseCurve(pts), FSR)
    assert rep.center_frequency == NU_C + 4 * FSR
    with pytest.raises(ValidationError):
        extract_peak_report(FinesseCurve(), FSR)


def test_band_sweep_curve_peaks_at_center():
    cfg = measured_band_config()
    lam_c = 851.8944e-9
    stride = 4
    scans = sweep_band(cfg, (lam_c - 0.1e-9, lam_c + 0.1e-9), 800, 3, NoiseModel(0.002, 0.0, 7), stride=stride)
    fits, failures = fit_many(scans, FSR)
    assert not failures
    curve = finesse_vs_frequency(fits, 2 * FSR)
    rep = extract_peak_report(curve, FSR)
    window = stride * FSR * lam_c**2 / C_LIGHT
    assert abs(rep.center_wavelength - lam_c) <= window
    f = curve.arrays()["finesse"]
    assert f[0] < rep.finesse and f[-1] < rep.finesse
