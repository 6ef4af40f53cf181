"""Thermal shift of FBG resonators and the averaged thermo-optic coefficient.

The Bragg (or resonator center) wavelength obeys
d lambda / lambda0 = (alpha + (1/n0) dn/dT) dT. Integrated between two
temperatures with constant alpha, the temperature-averaged thermo-optic
coefficient follows from a single pair of center-wavelength measurements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError, ValidationError


@dataclass(frozen=True)
class ThermoMeasurement:
    """Center wavelengths at two temperatures.

    ``lambda_uncertainty`` is the per-endpoint error; the two are combined
    in quadrature. ``shift_uncertainty``, when given, is used directly as the
    error of the shift instead (e.g. a band-width-limited overlap error that
    applies to the difference as a whole).
    """

    lambda_initial: float
    lambda_final: float
    t_initial: float
    t_final: float
    lambda_uncertainty: float = 0.0
    shift_uncertainty: float | None = None

    def __post_init__(self):
        if not (self.lambda_initial > 0 and self.lambda_final > 0):
            raise ValidationError("wavelengths must be positive")
        if self.lambda_uncertainty < 0 or (self.shift_uncertainty is not None and self.shift_uncertainty < 0):
            raise ValidationError("uncertainties must be non-negative")

    @property
    def shift(self) -> float:
        return self.lambda_final - self.lambda_initial

    @property
    def delta_t(self) -> float:
        return self.t_final - self.t_initial

    @property
    def sigma_shift(self) -> float:
        if self.shift_uncertainty is not None:
            return self.shift_uncertainty
        return math.sqrt(2.0) * self.lambda_uncertainty


@dataclass(frozen=True)
class SilicaThermoParams:
    alpha: float = 0.55e-6
    n0: float = 1.45
    photoelastic_coefficient: float = 0.22

    def __post_init__(self):
        if not self.n0 > 1:
            raise ValidationError("n0 must exceed 1")
        if not 0 <= self.photoelastic_coefficient < 1:
            raise ValidationError("photoelastic coefficient must lie in [0, 1)")


@dataclass(frozen=True)
class ThermoOpticResult:
    kappa_avg: float
    kappa_uncertainty: float
    dn_over_n: float
    dn_over_n_uncertainty: float
    fractional_shift: float
    fractional_shift_uncertainty: float


def predict_shift(lambda0: float, alpha: float, kappa_avg: float, dT: float) -> float:
    """lambda0 (alpha + kappa_avg) dT."""
    if not lambda0 > 0:
        raise ValidationError("lambda0 must be positive")
    return lambda0 * (alpha + kappa_avg) * dT


def extract_thermo_optic(meas: ThermoMeasurement, params: SilicaThermoParams = SilicaThermoParams()) -> ThermoOpticResult:
    dT = meas.delta_t
    if dT == 0:
        raise ParameterError("initial and final temperatures coincide")
    frac = meas.shift / meas.lambda_initial
    kappa = frac / dT - params.alpha
    sigma_frac = meas.sigma_shift / meas.lambda_initial
    sigma_kappa = sigma_frac / abs(dT)
    return ThermoOpticResult(
        kappa_avg=kappa,
        kappa_uncertainty=sigma_kappa,
        dn_over_n=kappa * dT,
        dn_over_n_uncertainty=sigma_kappa * abs(dT),
        fractional_shift=frac,
        fractional_shift_uncertainty=sigma_frac,
    )


def strain_from_shift(dlambda: float, lambda0: float, p_e: float = 0.22) -> float:
    """Axial strain (d lambda / lambda0) / (1 - p_e)."""
    if not lambda0 > 0:
        raise ValidationError("lambda0 must be positive")
    if p_e >= 1:
        raise ParameterError(f"photoelastic coefficient must be < 1, got {p_e}")
    return dlambda / lambda0 / (1.0 - p_e)


def roundtrip_consistency(meas: ThermoMeasurement, params: SilicaThermoParams = SilicaThermoParams(), kappa_offset: float = 0.0) -> float:
    """|predicted - measured| shift using the extracted coefficient (plus an optional offset)."""
    res = extract_thermo_optic(meas, params)
    pred = predict_shift(meas.lambda_initial, params.alpha, res.kappa_avg + kappa_offset, meas.delta_t)
    return abs(pred - meas.shift)
