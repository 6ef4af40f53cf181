import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.signal import find_peaks

from helpers import F_TRUE, FSR, NU_C, LAMBDA_C, flat_mirror_config, measured_band_config, window_around_resonance
from nanocav.cavity import composite_spectrum
from nanocav.errors import FitFailure, NumericalError, ValidationError
from nanocav.scanforge import BirefringenceModel, NoiseModel, generate_scan, member_noise, sweep_band
from nanocav.specfit import fit_scan


def test_noiseless_equals_composite():
    cfg = flat_mirror_config()
    _, win = window_around_resonance(cfg)
    s = generate_scan(cfg, win, 500)
    ref = composite_spectrum(cfg, np.linspace(*win, 500))
    assert np.array_equal(s.transmission, ref.transmission)
    assert np.array_equal(s.frequency, ref.frequency)
    zero_ext = generate_scan(cfg, win, 500, biref=BirefringenceModel(FSR / 3, 0.7, 0.0))
    assert np.array_equal(zero_ext.transmission, ref.transmission)


def test_balanced_birefringence():
    cfg = flat_mirror_config()
    nu0, _ = window_around_resonance(cfg)
    win = (nu0 - 0.1 * FSR, nu0 + 0.9 * FSR)
    s = generate_scan(cfg, win, 4001, biref=BirefringenceModel(FSR / 3, math.pi / 4, 1.0))
    peaks, _ = find_peaks(s.transmission, prominence=0.01)
    assert len(peaks) == 2
    h = s.transmission[peaks]
    assert h[0] == pytest.approx(h[1], rel=1e-3)
    assert s.frequency[peaks[1]] - s.frequency[peaks[0]] == pytest.approx(FSR / 3, abs=2 * (win[1] - win[0]) / 4000)


def test_determinism_and_streams():
    cfg = flat_mirror_config()
    _, win = window_around_resonance(cfg)
    noise = NoiseModel(0.01, 1e-9, 1234)
    a = generate_scan(cfg, win, 300, noise)
    b = generate_scan(cfg, win, 300, noise)
    assert a.equals(b)
    c = generate_scan(cfg, win, 300, NoiseModel(0.01, 1e-9, 1235))
    assert not np.array_equal(a.transmission, c.transmission)
    d = generate_scan(cfg, win, 300, member_noise(noise, 0, 1))
    assert not np.array_equal(a.transmission, d.transmission)


def test_detector_noise_mean():
    cfg = flat_mirror_config()
    _, win = window_around_resonance(cfg)
    n, sigma = 100_000, 0.01
    clean = generate_scan(cfg, win, n)
    noisy = generate_scan(cfg, win, n, NoiseModel(sigma, 0.0, 99))
    diff = noisy.transmission - clean.transmission
    assert abs(diff.mean()) < 5 * sigma / math.sqrt(n)
    assert diff.std() == pytest.approx(sigma, rel=0.02)
    assert np.all(noisy.sigma == sigma)


def _jitter_fits(jitter, seeds=12):
    cfg = flat_mirror_config()
    _, win = window_around_resonance(cfg)
    out = []
    for s in range(seeds):
        try:
            out.append(fit_scan(generate_scan(cfg, win, 4000, NoiseModel(0.0, jitter, s)), FSR).finesse)
        except (FitFailure, NumericalError):
            pass
    return np.array(out)


def test_jitter_rms_and_bias():
    # 3e-7 relative at 352 THz is ~106 MHz, wider than the 35.7 MHz linewidth
    assert 3e-7 * NU_C == pytest.approx(105.6e6, rel=1e-3)
    medians = [np.median(_jitter_fits(j)) for j in (1e-8, 3e-8, 3e-7)]
    assert medians[0] < F_TRUE
    assert medians[2] < medians[1] < medians[0]
    assert medians[2] < 0.5 * F_TRUE


def test_sweep_single_window_matches_generate_scan():
    cfg = flat_mirror_config(phase=0.0)
    nu0, _ = window_around_resonance(cfg)
    from scipy.constants import c
    band = (c / (nu0 + 0.3 * FSR), c / (nu0 - 0.3 * FSR))
    noise = NoiseModel(0.01, 0.0, 5)
    scans = sweep_band(cfg, band, 256, 1, noise)
    assert len(scans) == 1
    direct = generate_scan(cfg, (nu0 - 1.1 * FSR, nu0 + 1.1 * FSR), 256, member_noise(noise, 0, 0), label=scans[0].label)
    assert scans[0].equals(direct)


def test_sweep_deterministic():
    cfg = measured_band_config()
    band = (LAMBDA_C - 0.05e-9, LAMBDA_C + 0.05e-9)
    a = sweep_band(cfg, band, 200, 2, NoiseModel(0.01, 1e-9, 3), stride=5)
    b = sweep_band(cfg, band, 200, 2, NoiseModel(0.01, 1e-9, 3), stride=5)
    assert len(a) == len(b) > 2
    assert all(x.equals(y) for x, y in zip(a, b))


def test_sweep_validation():
    cfg = measured_band_config()
    with pytest.raises(ValidationError):
        sweep_band(cfg, (800e-9, 800.1e-9), 200, 1)
    with pytest.raises(ValidationError):
        sweep_band(cfg, (LAMBDA_C - 1e-11, LAMBDA_C + 1e-11), 200, 0)


def test_model_validation():
    with pytest.raises(ValidationError):
        NoiseModel(-1.0)
    with pytest.raises(ValidationError):
        BirefringenceModel(-1.0)
    with pytest.raises(ValidationError):
        BirefringenceModel(0.0, 0.0, 2.0)
    cfg = flat_mirror_config()
    with pytest.raises(ValidationError):
        generate_scan(cfg, (1e14, 1e14 + 1e9), 8)
    with pytest.raises(ValidationError):
        generate_scan(cfg, (1e14, 1e14), 100)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**64 - 1), st.floats(0.0, 0.05))
def test_fixed_seed_bit_identical(seed, sigma):
    cfg = flat_mirror_config()
    _, win = window_around_resonance(cfg)
    noise = NoiseModel(sigma, 1e-8, seed)
    assert generate_scan(cfg, win, 64, noise).equals(generate_scan(cfg, win, 64, noise))
