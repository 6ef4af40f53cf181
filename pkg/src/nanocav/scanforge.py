"""Synthetic transmission scans with the experiment's noise channels.

Noise sources: additive Gaussian detector noise, Gaussian wavemeter jitter
on the true laser frequency (the recorded axis stays on the nominal grid),
and a second, birefringence-split polarization mode mixed in by a
Malus-law weight. Random streams come from numpy's PCG64 seeded through
``SeedSequence(seed, spawn_key=stream)``, so every ensemble member has its
own independent, order-free stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import c as C_LIGHT

from .cavity import CavityConfig, composite_transmission, fbg_reflectivity
from .errors import ValidationError
from .spectrum import SpectrumScan


@dataclass(frozen=True)
class NoiseModel:
    detector_sigma: float = 0.0
    frequency_jitter_rel: float = 0.0
    seed: int = 0
    stream: tuple[int, ...] = ()

    def __post_init__(self):
        if self.detector_sigma < 0 or self.frequency_jitter_rel < 0:
            raise ValidationError("noise amplitudes must be non-negative")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(self.seed), spawn_key=self.stream)))

    @property
    def is_zero(self) -> bool:
        return self.detector_sigma == 0 and self.frequency_jitter_rel == 0


@dataclass(frozen=True)
class BirefringenceModel:
    """Two quasi-linear modes split by ``mode_splitting`` (Hz).

    The second mode carries weight ``extinction * sin^2(polarization_angle)``.
    """

    mode_splitting: float = 0.0
    polarization_angle: float = 0.0
    extinction: float = 1.0

    def __post_init__(self):
        if self.mode_splitting < 0:
            raise ValidationError("mode splitting must be non-negative")
        if not 0 <= self.extinction <= 1:
            raise ValidationError("extinction must lie in [0, 1]")

    @property
    def second_mode_weight(self) -> float:
        return self.extinction * math.sin(self.polarization_angle) ** 2


def generate_scan(
    config: CavityConfig,
    window,
    n_points: int,
    noise: NoiseModel = NoiseModel(),
    biref: BirefringenceModel = BirefringenceModel(),
    *,
    label: str = "synthetic",
    temperature: float | None = None,
) -> SpectrumScan:
    """One laser scan over ``window`` = (nu_lo, nu_hi) in Hz."""
    n_points = int(n_points)
    lo, hi = float(window[0]), float(window[1])
    if n_points < 16:
        raise ValidationError(f"n_points must be >= 16, got {n_points}")
    if not hi > lo:
        raise ValidationError("scan window must have positive width")
    nominal = np.linspace(lo, hi, n_points)
    rng = noise.rng()
    true_nu = nominal
    if noise.frequency_jitter_rel > 0:
        true_nu = nominal * (1.0 + noise.frequency_jitter_rel * rng.standard_normal(n_points))
    w2 = biref.second_mode_weight
    t = composite_transmission(config, true_nu)
    if w2 > 0:
        t = (1.0 - w2) * t + w2 * composite_transmission(config, true_nu - biref.mode_splitting)
    sigma = None
    if noise.detector_sigma > 0:
        t = t + noise.detector_sigma * rng.standard_normal(n_points)
        sigma = np.full(n_points, noise.detector_sigma)
    meta = {"seed": int(noise.seed), "stream": list(noise.stream)}
    return SpectrumScan(nominal, t, sigma=sigma, label=label, temperature=temperature, meta=meta)


def member_noise(noise: NoiseModel, window_index: int, repeat: int) -> NoiseModel:
    """Noise model of one sweep member; its stream is derived, not sequential."""
    return replace(noise, stream=tuple(noise.stream) + (int(window_index), int(repeat)))


def resonance_frequencies(config: CavityConfig, lo: float, hi: float) -> np.ndarray:
    """Frequencies in [lo, hi] where the round-trip phase is a multiple of 2 pi."""
    fsr = config.free_spectral_range
    shift = -config.phase_offset * fsr / (2.0 * math.pi)
    k = np.arange(math.ceil((lo - shift) / fsr), math.floor((hi - shift) / fsr) + 1)
    return k * fsr + shift


def sweep_band(
    config: CavityConfig,
    band,
    points_per_window: int,
    repeats: int,
    noise: NoiseModel = NoiseModel(),
    biref: BirefringenceModel = BirefringenceModel(),
    *,
    stride: int = 1,
    window_span: float = 2.2,
    temperature: float | None = None,
) -> list[SpectrumScan]:
    """Windows centred on every ``stride``-th resonance inside ``band``.

    ``band`` is a wavelength interval (m). Each window spans ``window_span``
    FSRs; the default 2.2 keeps both neighbouring resonances inside so the
    FSR is pinned by the peak spacing. Each window is scanned ``repeats``
    times with member-specific noise streams. Output order is window-major.
    """
    if repeats < 1 or stride < 1:
        raise ValidationError("repeats and stride must be >= 1")
    if not window_span > 0:
        raise ValidationError("window span must be positive")
    lam_lo, lam_hi = sorted(float(x) for x in band)
    probe = np.linspace(lam_lo, lam_hi, 201)
    r1 = np.asarray(fbg_reflectivity(config.mirror_1, probe))
    r2 = np.asarray(fbg_reflectivity(config.mirror_2, probe))
    if np.max(r1 * r2) < 1e-9:
        raise ValidationError("sweep band does not overlap the mirrors' stop band")
    fsr = config.free_spectral_range
    centers = resonance_frequencies(config, C_LIGHT / lam_hi, C_LIGHT / lam_lo)[::stride]
    scans = []
    for i, nu0 in enumerate(centers):
        window = (nu0 - 0.5 * window_span * fsr, nu0 + 0.5 * window_span * fsr)
        for rep in range(repeats):
            scans.append(generate_scan(
                config, window, points_per_window, member_noise(noise, i, rep), biref,
                label=f"w{i:04d}r{rep:02d}", temperature=temperature,
            ))
    return scans
