"""Modelling and analysis toolkit for nanofiber Fabry-Perot microresonators
formed by two fiber Bragg gratings."""

from .cavity import CavityConfig, FbgMirror, GaussianBand, CoupledModeBand, invert_finesse_transmission
from .config import ToolkitConfig, default_config, load_config
from .errors import NumericalError, ValidationError
from .fibermode import FiberGeometry, GuidedMode, solve_he11, single_mode_cutoff
from .spectrum import SpectrumScan

__version__ = "0.1.0"

__all__ = [
    "CavityConfig",
    "CoupledModeBand",
    "FbgMirror",
    "FiberGeometry",
    "GaussianBand",
    "GuidedMode",
    "NumericalError",
    "SpectrumScan",
    "ToolkitConfig",
    "ValidationError",
    "default_config",
    "invert_finesse_transmission",
    "load_config",
    "single_mode_cutoff",
    "solve_he11",
]
