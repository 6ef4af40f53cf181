"""Shared synthetic setups for the test suite."""

import numpy as np
from scipy.constants import c as C_LIGHT

from nanocav.cavity import CavityConfig, FbgMirror, GaussianBand, invert_finesse_transmission
from nanocav.scanforge import NoiseModel, generate_scan, resonance_frequencies

F_TRUE = 29.4
FSR = 1.05e9
NU_C = 351.9127e12
LAMBDA_C = 851.8944e-9


def flat_mirror_config(f=F_TRUE, peak=0.14, phase=0.7):
    """Cavity whose mirrors are flat across a scan window, tuned to finesse ``f``."""
    inv = invert_finesse_transmission(f, peak)
    m = FbgMirror(C_LIGHT / NU_C, inv.reflectivity, GaussianBand(1e-6))
    return CavityConfig(m, m, inv.single_pass_transmission, FSR, phase_offset=phase)


def window_around_resonance(cfg, span=2.2):
    res = resonance_frequencies(cfg, NU_C - FSR, NU_C + FSR)
    nu0 = float(res[np.argmin(np.abs(res - NU_C))])
    return nu0, (nu0 - 0.5 * span * FSR, nu0 + 0.5 * span * FSR)


def synthetic_scan(n=2000, sigma=0.0, seed=0, cfg=None):
    cfg = cfg or flat_mirror_config()
    nu0, win = window_around_resonance(cfg)
    return nu0, generate_scan(cfg, win, n, NoiseModel(sigma, 0.0, seed))


def measured_band_config():
    g = GaussianBand(0.1e-9)
    m1 = FbgMirror(LAMBDA_C - 0.01e-9, 0.962, g)
    m2 = FbgMirror(LAMBDA_C + 0.01e-9, 0.962, g)
    return CavityConfig(m1, m2, 0.934, FSR)


ACCEPTANCE_LINES: list[str] = []


def record(n, ok, detail):
    """Print and remember one acceptance verdict line."""
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok
