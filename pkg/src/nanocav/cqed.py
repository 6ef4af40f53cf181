"""Cavity-QED figures of merit for an emitter on the nanofiber surface.

Rate convention: every rate here is a half-width rate. ``gamma0`` is half
the free-space spontaneous emission rate and ``kappa`` is half the cavity
energy decay rate, so that C = g^2 / (2 gamma0 kappa) and 2 kappa = omega / Q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.constants import c as C_LIGHT
from scipy.constants import epsilon_0, hbar

from .errors import ValidationError

#: Squared-overlap factor for a randomly oriented dipole against a fixed linear polarization.
ORIENTATION_AVERAGE = 1.0 / 3.0


@dataclass(frozen=True)
class EmitterParams:
    dipole_moment: float
    free_space_linewidth: float
    transition_wavelength: float

    def __post_init__(self):
        if not (self.dipole_moment > 0 and self.free_space_linewidth > 0 and self.transition_wavelength > 0):
            raise ValidationError("emitter parameters must be positive")

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * C_LIGHT / self.transition_wavelength

    @classmethod
    def two_level(cls, dipole_moment: float, transition_wavelength: float) -> "EmitterParams":
        """Emitter whose linewidth is the radiative limit of its own dipole."""
        omega = 2.0 * math.pi * C_LIGHT / transition_wavelength
        return cls(dipole_moment, free_space_gamma0(dipole_moment, omega), transition_wavelength)


def free_space_gamma0(dipole_moment: float, omega: float) -> float:
    """Half the Einstein A rate: mu^2 omega^3 / (6 pi eps0 hbar c^3)."""
    return dipole_moment**2 * omega**3 / (6.0 * math.pi * epsilon_0 * hbar * C_LIGHT**3)


@dataclass(frozen=True)
class CouplingEnvironment:
    q_factor: float
    mode_volume: float
    eta_guided: float = 0.2
    p_tof: float = 1.57

    def __post_init__(self):
        if not (self.q_factor > 0 and self.mode_volume > 0):
            raise ValidationError("Q and mode volume must be positive")
        if not 0 <= self.eta_guided <= 1:
            raise ValidationError("eta must lie in [0, 1]")
        if self.p_tof < 1:
            raise ValidationError("P_TOF must be >= 1")

    @classmethod
    def from_area(cls, q_factor, a_eff_surf, cavity_length, **kwargs) -> "CouplingEnvironment":
        return cls(q_factor, a_eff_surf * cavity_length, **kwargs)


def coupling_g(emitter: EmitterParams, v: float) -> float:
    """Half the single-photon Rabi frequency, g = sqrt(2 mu^2 omega / (hbar eps0 V)) / 2."""
    if not v > 0:
        raise ValidationError("mode volume must be positive")
    return 0.5 * math.sqrt(2.0 * emitter.dipole_moment**2 * emitter.omega / (hbar * epsilon_0 * v))


def cavity_kappa(omega: float, q: float) -> float:
    """kappa = omega / (2Q)."""
    return omega / (2.0 * q)


def cooperativity(g: float, gamma0: float, kappa: float) -> float:
    if not (g > 0 and gamma0 > 0 and kappa > 0):
        raise ValidationError("rates must be positive")
    return g * g / (2.0 * gamma0 * kappa)


def purcell(q: float, v: float, wavelength: float, orientation: str = "aligned") -> float:
    """F_P = 3 lambda^3 Q / (4 pi^2 V); an orientation-averaged dipole gets a third of it."""
    if q < 0 or not (v > 0 and wavelength > 0):
        raise ValidationError("Q must be non-negative, V and wavelength positive")
    fp = 3.0 * wavelength**3 * q / (4.0 * math.pi**2 * v)
    if orientation == "aligned":
        return fp
    if orientation == "orientation_averaged":
        return fp * ORIENTATION_AVERAGE
    raise ValidationError(f"unknown orientation {orientation!r}")


def mode_volume(a_eff_surf: float, fsr: float) -> float:
    """Effective area times the cavity length c / (2 FSR)."""
    if not (a_eff_surf > 0 and fsr > 0):
        raise ValidationError("area and FSR must be positive")
    return a_eff_surf * C_LIGHT / (2.0 * fsr)


def channeling_efficiency(eta: float, p_tof: float, f_p: float) -> float:
    """(eta P_TOF + F_P) / (P_TOF + F_P)."""
    if not 0 <= eta <= 1:
        raise ValidationError("eta must lie in [0, 1]")
    if p_tof < 1 or f_p < 0:
        raise ValidationError("need P_TOF >= 1 and F_P >= 0")
    if math.isinf(f_p):
        return 1.0
    return (eta * p_tof + f_p) / (p_tof + f_p)


def channeling_threshold(p_tof: float, f_p: float, target: float = 0.8) -> float:
    """Smallest bare-fiber eta that gives a cavity channeling efficiency >= ``target``.

    Returns 0 when the Purcell term alone reaches the target.
    """
    if not 0 < target <= 1:
        raise ValidationError("target efficiency must lie in (0, 1]")
    if p_tof < 1 or f_p < 0:
        raise ValidationError("need P_TOF >= 1 and F_P >= 0")
    return max(0.0, (target * (p_tof + f_p) - f_p) / p_tof)


def figures_of_merit(env: CouplingEnvironment, wavelength: float, emitter: EmitterParams | None = None) -> dict:
    """Purcell factors, channeling efficiencies and, with an emitter, g, kappa and C."""
    fp = purcell(env.q_factor, env.mode_volume, wavelength, "aligned")
    fp_avg = purcell(env.q_factor, env.mode_volume, wavelength, "orientation_averaged")
    out = {
        "mode_volume": env.mode_volume,
        "mode_volume_lambda3": env.mode_volume / wavelength**3,
        "purcell_aligned": fp,
        "purcell_averaged": fp_avg,
        "cooperativity_aligned": fp / 2.0,
        "eta_c_aligned": channeling_efficiency(env.eta_guided, env.p_tof, fp),
        "eta_c_averaged": channeling_efficiency(env.eta_guided, env.p_tof, fp_avg),
        "eta_threshold_averaged": channeling_threshold(env.p_tof, fp_avg),
    }
    if emitter is not None:
        g = coupling_g(emitter, env.mode_volume)
        kappa = cavity_kappa(emitter.omega, env.q_factor)
        out.update(g=g, kappa=kappa, gamma0=emitter.free_space_linewidth,
                   cooperativity=cooperativity(g, emitter.free_space_linewidth, kappa))
    return out
