"""Sampled transmission trace shared by the simulator, the fitter and file I/O."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ValidationError

NORMALIZATIONS = ("raw", "off_band_normalized")


@dataclass(frozen=True, eq=False)
class SpectrumScan:
    """Transmission versus optical frequency.

    ``sigma`` holds optional per-point standard deviations used as fit
    weights. Transmission values may dip below zero when detector noise is
    present; only finiteness is enforced.
    """

    frequency: np.ndarray
    transmission: np.ndarray
    sigma: np.ndarray | None = None
    normalization: str = "raw"
    temperature: float | None = None
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        nu = np.ascontiguousarray(self.frequency, dtype=float)
        t = np.ascontiguousarray(self.transmission, dtype=float)
        object.__setattr__(self, "frequency", nu)
        object.__setattr__(self, "transmission", t)
        if nu.ndim != 1 or t.shape != nu.shape:
            raise ValidationError("frequency and transmission must be 1-D arrays of equal length")
        if nu.size < 8:
            raise ValidationError(f"a scan needs at least 8 samples, got {nu.size}")
        if not np.all(np.isfinite(nu)) or not np.all(np.isfinite(t)):
            raise ValidationError("scan contains non-finite samples")
        if np.any(np.diff(nu) <= 0):
            raise ValidationError("scan frequency must be strictly increasing")
        if self.sigma is not None:
            s = np.ascontiguousarray(self.sigma, dtype=float)
            if s.shape != nu.shape or not np.all(np.isfinite(s)) or np.any(s <= 0):
                raise ValidationError("sigma must be positive, finite and match the sample count")
            object.__setattr__(self, "sigma", s)
        if self.normalization not in NORMALIZATIONS:
            raise ValidationError(f"unknown normalization tag {self.normalization!r}")

    def __len__(self):
        return self.frequency.size

    @property
    def wavelength(self) -> np.ndarray:
        from scipy.constants import c

        return c / self.frequency

    def with_transmission(self, transmission, **changes) -> "SpectrumScan":
        return replace(self, transmission=transmission, **changes)

    def equals(self, other: "SpectrumScan") -> bool:
        """Bit-for-bit equality of samples and metadata."""
        same_sigma = (self.sigma is None and other.sigma is None) or (
            self.sigma is not None and other.sigma is not None and np.array_equal(self.sigma, other.sigma)
        )
        return (
            np.array_equal(self.frequency, other.frequency)
            and np.array_equal(self.transmission, other.transmission)
            and same_sigma
            and self.normalization == other.normalization
            and self.temperature == other.temperature
            and self.label == other.label
        )
