"""Toolkit configuration: a flat sectioned ``key = value`` file.

Lengths are given in the units named by the key suffix (``_nm``, ``_mm``,
``_um``); frequencies in GHz. Every block is validated by constructing the
corresponding domain object, so an invalid file fails before any command
runs. The defaults reproduce the tapered resonator measured at 4.6 K.
"""

from __future__ import annotations

import configparser
import os
from io import StringIO
from dataclasses import dataclass, field
from pathlib import Path

from .cavity import CavityConfig, CoupledModeBand, FbgMirror, GaussianBand
from .errors import FormatError, ValidationError
from .fibermode import FUSED_SILICA, FiberGeometry, SellmeierModel
from .scanforge import NoiseModel
from .thermo import SilicaThermoParams

CONFIG_ENV = "NANOCAV_CONFIG"

DEFAULT_TEXT = """\
[fiber]
diameter_nm = 500
cladding_index = 1.0
sellmeier_b = 0.6961663, 0.4079426, 0.8974794
sellmeier_c_um = 0.0684043, 0.1162414, 9.896161
sellmeier_range_um = 0.21, 3.71
sellmeier_source = Malitson 1965, fused silica, 0.21-3.71 um

[cavity]
bragg_wavelength_1_nm = 851.8944
bragg_wavelength_2_nm = 851.8944
peak_reflectivity_1 = 0.9620969720257314
peak_reflectivity_2 = 0.9620969720257314
band_model = gaussian
hwhm_nm = 0.1
grating_length_mm = 10
effective_index = 1.45
single_pass_transmission = 0.9341053166619054
fsr_ghz = 1.05
phase_offset = 0.0

[emitter]
wavelength_nm = 852
eta = 0.2
p_tof = 1.57
dipole_moment_debye =

[thermo]
alpha = 0.55e-6
n0 = 1.45
photoelastic_coefficient = 0.22

[noise]
detector_sigma = 0.0
frequency_jitter_rel = 0.0
seed = 0

[output]
directory = nanocav-out
"""


@dataclass(frozen=True)
class EmitterBlock:
    wavelength: float = 852e-9
    eta: float = 0.2
    p_tof: float = 1.57
    dipole_moment: float | None = None

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValidationError("emitter wavelength must be positive")
        if not 0 <= self.eta <= 1:
            raise ValidationError("eta must lie in [0, 1]")
        if self.p_tof < 1:
            raise ValidationError("P_TOF must be >= 1")
        if self.dipole_moment is not None and not self.dipole_moment > 0:
            raise ValidationError("dipole moment must be positive")


@dataclass(frozen=True)
class ToolkitConfig:
    fiber: FiberGeometry
    cavity: CavityConfig
    emitter: EmitterBlock = EmitterBlock()
    thermo: SilicaThermoParams = SilicaThermoParams()
    noise: NoiseModel = NoiseModel()
    output_dir: Path = Path("nanocav-out")
    raw: dict = field(default_factory=dict, compare=False, repr=False)


DEBYE = 3.33564e-30


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def parse_config(text: str, source: str = "<config>") -> ToolkitConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.read_string(DEFAULT_TEXT)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise FormatError(str(exc), None, source) from None
    try:
        return _build(cp)
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise FormatError(f"bad value: {exc}", None, source) from None


def _build(cp: configparser.ConfigParser) -> ToolkitConfig:
    f = cp["fiber"]
    b, c_um, rng = _floats(f["sellmeier_b"]), _floats(f["sellmeier_c_um"]), _floats(f["sellmeier_range_um"])
    if len(rng) != 2:
        raise ValidationError("sellmeier_range_um needs two values")
    model = SellmeierModel(b, c_um, rng[0] * 1e-6, rng[1] * 1e-6, f.get("sellmeier_source", ""))
    if model.b == FUSED_SILICA.b and model.c_um == FUSED_SILICA.c_um and (model.wl_min, model.wl_max) == (FUSED_SILICA.wl_min, FUSED_SILICA.wl_max):
        model = FUSED_SILICA
    fiber = FiberGeometry(f.getfloat("diameter_nm") * 0.5e-9, model, f.getfloat("cladding_index"))

    cv = cp["cavity"]
    kind = cv["band_model"].strip()
    mirrors = []
    for i in (1, 2):
        lam = cv.getfloat(f"bragg_wavelength_{i}_nm") * 1e-9
        peak = cv.getfloat(f"peak_reflectivity_{i}")
        if kind == "gaussian":
            mirrors.append(FbgMirror(lam, peak, GaussianBand(cv.getfloat("hwhm_nm") * 1e-9)))
        elif kind == "coupled_mode":
            band = CoupledModeBand.for_peak(peak, cv.getfloat("grating_length_mm") * 1e-3, cv.getfloat("effective_index"))
            mirrors.append(FbgMirror(lam, band.peak, band))
        else:
            raise ValidationError(f"unknown band_model {kind!r} (gaussian or coupled_mode)")
    cavity = CavityConfig(mirrors[0], mirrors[1], cv.getfloat("single_pass_transmission"),
                          cv.getfloat("fsr_ghz") * 1e9, cv.getfloat("phase_offset"))

    em = cp["emitter"]
    mu = em.get("dipole_moment_debye", "").strip()
    emitter = EmitterBlock(em.getfloat("wavelength_nm") * 1e-9, em.getfloat("eta"), em.getfloat("p_tof"),
                           float(mu) * DEBYE if mu else None)

    th = cp["thermo"]
    thermo = SilicaThermoParams(th.getfloat("alpha"), th.getfloat("n0"), th.getfloat("photoelastic_coefficient"))

    nz = cp["noise"]
    noise = NoiseModel(nz.getfloat("detector_sigma"), nz.getfloat("frequency_jitter_rel"), nz.getint("seed"))

    raw = {s: dict(cp[s]) for s in cp.sections()}
    return ToolkitConfig(fiber, cavity, emitter, thermo, noise, Path(cp["output"]["directory"]), raw)


def default_config() -> ToolkitConfig:
    return parse_config("", "<defaults>")


def load_config(path=None) -> ToolkitConfig:
    """Load ``path``, else the file named by $NANOCAV_CONFIG, else the defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV) or None
    if path is None:
        return default_config()
    p = Path(path)
    if not p.is_file():
        raise FormatError("config file not found", None, str(p))
    return parse_config(p.read_text(), str(p))


def config_text(cfg: ToolkitConfig) -> str:
    """Snapshot of the resolved configuration in the same file format."""
    cp = configparser.ConfigParser()
    cp.read_dict(cfg.raw)
    buf = StringIO()
    cp.write(buf)
    return buf.getvalue()
