"""Exact HE11 mode of a vacuum-clad step-index nanofiber.

The hybrid-mode dispersion relation of a two-layer cylindrical waveguide is
solved for the fundamental root, and the exact Bessel-function fields are
power-normalized to give the intensity and polarization at the fiber
surface. Everything is in SI units; wavelengths are vacuum wavelengths in
metres.

Field convention (circularly polarized basis, l = +1, amplitude omitted)::

    r < a:  e_r = i (w/u) K1(w)/J1(u) [(1-s) J0(hr) - (1+s) J2(hr)]
            e_phi = -(w/u) K1(w)/J1(u) [(1-s) J0(hr) + (1+s) J2(hr)]
            e_z = (2q/beta) K1(w)/J1(u) J1(hr)
    r > a:  e_r = i [(1-s) K0(qr) + (1+s) K2(qr)]
            e_phi = -[(1-s) K0(qr) - (1+s) K2(qr)]
            e_z = (2q/beta) K1(qr)

with h = u/a, q = w/a. The quasi-linear mode polarized along azimuth 0 is
the symmetric superposition of l = +1 and l = -1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import integrate, optimize, special
from scipy.constants import c as C_LIGHT
from scipy.constants import epsilon_0, mu_0

from .errors import DomainError, InfiniteAreaError, ModeNotGuidedError, NotFoundError, ValidationError

#: First zero of J0; single-mode operation for V below this value.
V_CUTOFF = float(special.jn_zeros(0, 1)[0])


@dataclass(frozen=True)
class SellmeierModel:
    """Three-term Sellmeier dispersion n^2 = 1 + sum B_i L^2 / (L^2 - C_i^2).

    ``c_um`` holds the resonance wavelengths C_i in micrometres.
    """

    b: tuple[float, float, float]
    c_um: tuple[float, float, float]
    wl_min: float
    wl_max: float
    source: str = ""

    def __post_init__(self):
        if len(self.b) != 3 or len(self.c_um) != 3:
            raise ValidationError("Sellmeier model needs exactly three B and three C terms")
        if not 0 < self.wl_min < self.wl_max:
            raise ValidationError("Sellmeier validity window must satisfy 0 < wl_min < wl_max")

    def index(self, wavelength):
        lam2 = (np.asarray(wavelength, dtype=float) * 1e6) ** 2
        n2 = 1.0
        for b, c in zip(self.b, self.c_um):
            n2 = n2 + b * lam2 / (lam2 - c * c)
        return np.sqrt(n2)


@dataclass(frozen=True)
class ConstantIndex:
    """Wavelength-independent index; useful for scaling checks."""

    n: float
    wl_min: float = 0.0
    wl_max: float = math.inf
    source: str = "constant"

    def index(self, wavelength):
        return np.full(np.shape(wavelength), self.n) if np.ndim(wavelength) else self.n


DispersionModel = Union[SellmeierModel, ConstantIndex]

# Malitson, J. Opt. Soc. Am. 55, 1205 (1965); fused silica at 20 C.
FUSED_SILICA = SellmeierModel(
    b=(0.6961663, 0.4079426, 0.8974794),
    c_um=(0.0684043, 0.1162414, 9.896161),
    wl_min=0.21e-6,
    wl_max=3.71e-6,
    source="Malitson 1965, fused silica, 0.21-3.71 um",
)


def refractive_index(model: DispersionModel, wavelength):
    """Index of ``model`` at vacuum ``wavelength`` (m).

    Raises DomainError outside the model's validity window.
    """
    wl = np.asarray(wavelength, dtype=float)
    if np.any(~np.isfinite(wl)) or np.any(wl < model.wl_min) or np.any(wl > model.wl_max):
        raise DomainError(
            f"wavelength {wavelength!r} m outside dispersion validity window "
            f"[{model.wl_min:g}, {model.wl_max:g}] m"
        )
    n = model.index(wl)
    return float(n) if np.ndim(n) == 0 else n


@dataclass(frozen=True)
class FiberGeometry:
    """Circular dielectric waveguide: radius, core dispersion, cladding index."""

    radius: float
    core_index_model: DispersionModel = FUSED_SILICA
    cladding_index: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValidationError(f"fiber radius must be positive, got {self.radius}")
        lo = max(0.3e-6, self.core_index_model.wl_min)
        hi = min(2.0e-6, self.core_index_model.wl_max)
        if lo < hi:
            probe = np.linspace(lo, hi, 17)
        else:
            probe = np.array([self.core_index_model.wl_min])
        if np.any(np.asarray(self.core_index_model.index(probe)) <= self.cladding_index):
            raise ValidationError("core index must exceed cladding index over 0.3-2.0 um")

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def core_index(self, wavelength) -> float:
        return refractive_index(self.core_index_model, wavelength)


def v_number(geom: FiberGeometry, wavelength: float) -> float:
    n1 = geom.core_index(wavelength)
    return 2.0 * math.pi * geom.radius / wavelength * math.sqrt(n1 * n1 - geom.cladding_index**2)


def single_mode_cutoff(geom: FiberGeometry) -> float:
    """Wavelength at which V = 2.405; all longer wavelengths are single-mode."""
    model = geom.core_index_model
    lo = max(model.wl_min, 1e-9)
    hi = model.wl_max if math.isfinite(model.wl_max) else 1e3 * geom.radius

    def g(wl):
        return v_number(geom, wl) - V_CUTOFF

    g_lo, g_hi = g(lo), g(hi)
    if g_lo * g_hi > 0:
        raise NotFoundError(
            f"V = {V_CUTOFF:.4f} not reached inside [{lo:g}, {hi:g}] m for radius {geom.radius:g} m"
        )
    return optimize.brentq(g, lo, hi, xtol=1e-22, rtol=4 * np.finfo(float).eps, maxiter=200)


def _he11_terms(n_eff: float, k0: float, a: float, n1: float, n2: float):
    u = a * k0 * math.sqrt(n1 * n1 - n_eff * n_eff)
    w = a * k0 * math.sqrt(n_eff * n_eff - n2 * n2)
    j1 = special.jv(1, u)
    jp = special.jvp(1, u) / u
    kt = special.kvp(1, w) / (w * special.kv(1, w))
    # (J + K)(n1^2 J + n2^2 K) = (n_eff (1/u^2 + 1/w^2))^2, multiplied by J1(u)^2
    # to remove the poles at the zeros of J1.
    lhs = (jp + j1 * kt) * (n1 * n1 * jp + n2 * n2 * j1 * kt)
    rhs = (n_eff * (1.0 / u**2 + 1.0 / w**2) * j1) ** 2
    return lhs, rhs


def he11_characteristic(n_eff: float, k0: float, a: float, n1: float, n2: float) -> float:
    """Normalized HE11 characteristic function; zero at a guided mode.

    Scaled by |lhs| + |rhs| so the value is dimensionless and O(1).
    """
    lhs, rhs = _he11_terms(n_eff, k0, a, n1, n2)
    return (lhs - rhs) / (abs(lhs) + abs(rhs))


@dataclass(frozen=True)
class GuidedMode:
    """Solved quasi-linearly polarized HE11 mode.

    ``surface_intensity_ratio`` is I_surf / P at azimuth 0 (the polarization
    axis, where the surface intensity peaks). ``a_eff_surf`` is P / I_surf
    there, the area for a dipole in perfect overlap with the local field and
    therefore the minimum effective area.
    """

    wavelength: float
    beta: float
    n_eff: float
    surface_intensity_ratio: float
    a_eff_surf: float
    radius: float
    core_index: float
    cladding_index: float
    residual: float
    # internal field constants: u, w, s, power of the unit-amplitude field
    _u: float = field(repr=False, default=0.0)
    _w: float = field(repr=False, default=0.0)
    _s: float = field(repr=False, default=0.0)
    _power: float = field(repr=False, default=1.0)

    @property
    def k0(self) -> float:
        return 2.0 * math.pi / self.wavelength

    def circular_fields(self, r):
        """Unit-amplitude (e_r, e_phi, e_z, de_z/dr) of the l = +1 mode at radius r."""
        return _circular_fields(r, self.radius, self._u, self._w, self._s, self.beta)

    def electric_field(self, r: float, azimuth: float) -> np.ndarray:
        """Cartesian complex E of the quasi-linear mode carrying 1 W, at (r, azimuth).

        ``r`` equal to the radius is evaluated on the cladding side.
        """
        er, ephi, ez, _ = _circular_fields(r, self.radius, self._u, self._w, self._s, self.beta, outside_at_boundary=True)
        scale = math.sqrt(2.0 / self._power)
        cp, sp = math.cos(azimuth), math.sin(azimuth)
        e_r = scale * er * cp
        e_phi = scale * 1j * ephi * sp
        e_z = scale * ez * cp
        return np.array([e_r * cp - e_phi * sp, e_r * sp + e_phi * cp, e_z], dtype=complex)

    def surface_intensity(self, azimuth: float = 0.0) -> float:
        """Intensity eps0 c n |E|^2 / 2 just outside the surface, per watt guided."""
        e = self.electric_field(self.radius, azimuth)
        return 0.5 * epsilon_0 * C_LIGHT * self.cladding_index * float(np.vdot(e, e).real)

    def surface_polarization(self, azimuth: float = 0.0) -> np.ndarray:
        e = self.electric_field(self.radius, azimuth)
        return e / np.linalg.norm(e)

    def best_dipole(self, azimuth: float = 0.0) -> tuple[np.ndarray, float]:
        """Real unit dipole maximizing |d . e_surf|^2, and that maximum."""
        return best_real_overlap(self.surface_polarization(azimuth))


def best_real_overlap(polarization: np.ndarray) -> tuple[np.ndarray, float]:
    """Maximize |d . e|^2 over real unit vectors d.

    For real d, |d . e|^2 = d^T Re(e e^H) d, so the optimum is the top
    eigenpair of that symmetric matrix. A circular or elliptical e cannot
    be fully matched by a linear dipole.
    """
    e = np.asarray(polarization, dtype=complex)
    m = np.outer(e.real, e.real) + np.outer(e.imag, e.imag)
    vals, vecs = np.linalg.eigh(m)
    d = vecs[:, -1]
    # fix the sign so results are reproducible
    if d[np.argmax(np.abs(d))] < 0:
        d = -d
    return d, float(vals[-1])


def effective_area(power: float, intensity: float, projection: float) -> float:
    """P / (I (d . e)^2)."""
    if projection <= 1e-30 or intensity <= 0:
        raise InfiniteAreaError("dipole is orthogonal to the surface field; effective area is infinite")
    return power / (intensity * projection)


def _circular_fields(r, a, u, w, s, beta, outside_at_boundary=False):
    r = float(r)
    h, q = u / a, w / a
    if r < a or (r == a and not outside_at_boundary):
        coef = (w / u) * special.kv(1, w) / special.jv(1, u)
        hr = h * r
        j0, j1, j2 = special.jv(0, hr), special.jv(1, hr), special.jv(2, hr)
        a_r = coef * ((1 - s) * j0 - (1 + s) * j2)
        e_phi = -coef * ((1 - s) * j0 + (1 + s) * j2)
        zc = 2 * q / beta * special.kv(1, w) / special.jv(1, u)
        e_z = zc * j1
        de_z = zc * h * special.jvp(1, hr)
    else:
        qr = q * r
        k0_, k1_, k2_ = special.kv(0, qr), special.kv(1, qr), special.kv(2, qr)
        a_r = (1 - s) * k0_ + (1 + s) * k2_
        e_phi = -((1 - s) * k0_ - (1 + s) * k2_)
        e_z = 2 * q / beta * k1_
        de_z = 2 * q / beta * q * special.kvp(1, qr)
    return 1j * a_r, e_phi, e_z, de_z


def _poynting_z(r, a, u, w, s, beta, omega):
    """Time-averaged S_z of the unit-amplitude circular mode; phi independent."""
    er, ephi, ez, dez = _circular_fields(r, a, u, w, s, beta)
    ar = er.imag
    return (beta * (ar * ar + ephi * ephi) + ar * dez - ephi * ez / r) / (2.0 * omega * mu_0)


def _find_root_bracket(f, lo: float, hi: float, n_scan: int):
    """Scan from the high end down; return the first sign-change interval."""
    grid = np.linspace(hi, lo, n_scan)
    prev_x, prev_f = grid[0], f(grid[0])
    for x in grid[1:]:
        fx = f(x)
        if prev_f == 0.0:
            return prev_x, prev_x
        if np.sign(fx) != np.sign(prev_f):
            return x, prev_x
        prev_x, prev_f = x, fx
    return None


def solve_he11(geom: FiberGeometry, wavelength: float, *, n_scan: int = 64, tol: float = 1e-12) -> GuidedMode:
    """Fundamental HE11 root of the exact dispersion relation.

    The effective index is bracketed on (n2 + 1e-9, n1 - 1e-9) by a coarse
    scan and refined by bisection until the bracket is below ``tol``.
    """
    n1 = geom.core_index(wavelength)
    n2 = geom.cladding_index
    a = geom.radius
    k0 = 2.0 * math.pi / wavelength
    lo, hi = n2 + 1e-9, n1 - 1e-9
    if not lo < hi:
        raise ModeNotGuidedError(f"index contrast {n1 - n2:.3g} is below the solver resolution")

    def f(n):
        return he11_characteristic(n, k0, a, n1, n2)

    bracket = _find_root_bracket(f, lo, hi, n_scan)
    if bracket is None:
        raise ModeNotGuidedError(
            f"no HE11 sign change on ({n2}, {n1}) at wavelength {wavelength:g} m, radius {a:g} m"
        )
    x0, x1 = bracket
    f0 = f(x0)
    while x1 - x0 > tol:
        mid = 0.5 * (x0 + x1)
        fm = f(mid)
        if fm == 0.0:
            x0 = x1 = mid
            break
        if np.sign(fm) == np.sign(f0):
            x0, f0 = mid, fm
        else:
            x1 = mid
    n_eff = 0.5 * (x0 + x1)
    residual = abs(f(n_eff))

    beta = n_eff * k0
    u = a * k0 * math.sqrt(n1 * n1 - n_eff * n_eff)
    w = a * k0 * math.sqrt(n_eff * n_eff - n2 * n2)
    jt = special.jvp(1, u) / (u * special.jv(1, u))
    kt = special.kvp(1, w) / (w * special.kv(1, w))
    s = (1.0 / u**2 + 1.0 / w**2) / (jt + kt)

    omega = C_LIGHT * k0
    args = (a, u, w, s, beta, omega)
    p_in, _ = integrate.quad(lambda r: _poynting_z(r, *args) * r, 0.0, a, epsabs=0, epsrel=1e-12, limit=200)
    # |E|^2 outside decays roughly as exp(-2 w r / a); beyond 40 / w decay
    # lengths the tail is below 1e-30 of the total. A finite upper limit on
    # the physical scale keeps quad sampling where the field lives.
    outer = lambda r: _poynting_z(max(r, a * (1 + 1e-15)), *args) * r  # noqa: E731
    r_max = a * (1.0 + 40.0 / w)
    p_out, _ = integrate.quad(outer, a, r_max, points=[a * (1.0 + 1.0 / w), a * (1.0 + 5.0 / w)],
                              epsabs=0, epsrel=1e-12, limit=400)
    power = 2.0 * math.pi * (p_in + p_out)

    partial = GuidedMode(
        wavelength=wavelength, beta=beta, n_eff=n_eff, surface_intensity_ratio=0.0, a_eff_surf=0.0,
        radius=a, core_index=n1, cladding_index=n2, residual=residual,
        _u=u, _w=w, _s=s, _power=power,
    )
    i_surf = partial.surface_intensity(0.0)
    return GuidedMode(
        wavelength=wavelength, beta=beta, n_eff=n_eff, surface_intensity_ratio=i_surf,
        a_eff_surf=effective_area(1.0, i_surf, 1.0),
        radius=a, core_index=n1, cladding_index=n2, residual=residual,
        _u=u, _w=w, _s=s, _power=power,
    )


@dataclass(frozen=True)
class DipoleOrientation:
    """Emitter dipole direction.

    ``kind`` is ``"vector"`` (use ``unit_vector``), ``"aligned"`` (perfect
    overlap, (d . e)^2 = 1), ``"best_real"`` (the real direction of best
    overlap with the local, generally elliptical, polarization) or
    ``"orientation_averaged"``.
    """

    unit_vector: tuple[float, float, float] | None = None
    kind: str = "vector"

    def __post_init__(self):
        if self.kind not in ("vector", "aligned", "best_real", "orientation_averaged"):
            raise ValidationError(f"unknown dipole orientation {self.kind!r}")
        if self.kind == "vector":
            if self.unit_vector is None or len(self.unit_vector) != 3:
                raise ValidationError("explicit dipole orientation needs a 3-vector")
            norm = math.sqrt(sum(x * x for x in self.unit_vector))
            if abs(norm - 1.0) > 1e-12:
                raise ValidationError(f"dipole vector must have unit norm, got {norm!r}")

    @classmethod
    def along(cls, vector) -> "DipoleOrientation":
        v = np.asarray(vector, dtype=float)
        return cls(unit_vector=tuple(float(x) for x in v / np.linalg.norm(v)))

    @classmethod
    def aligned(cls) -> "DipoleOrientation":
        return cls(kind="aligned")

    @classmethod
    def best_real(cls) -> "DipoleOrientation":
        return cls(kind="best_real")

    @classmethod
    def averaged(cls) -> "DipoleOrientation":
        return cls(kind="orientation_averaged")

    def projection(self, polarization: np.ndarray) -> float:
        """Squared overlap |d . e|^2 with a complex unit polarization vector."""
        if self.kind == "aligned":
            return 1.0
        if self.kind == "best_real":
            return best_real_overlap(polarization)[1]
        if self.kind == "orientation_averaged":
            return 1.0 / 3.0
        return float(abs(np.dot(np.asarray(self.unit_vector), polarization)) ** 2)


def mode_area_surface(mode: GuidedMode, orientation: DipoleOrientation, azimuth: float = 0.0) -> float:
    """Effective area P / (I_surf (d . e_surf)^2) for an emitter on the fiber surface.

    ``azimuth`` is measured from the quasi-linear polarization axis.
    """
    proj = orientation.projection(mode.surface_polarization(azimuth))
    return effective_area(1.0, mode.surface_intensity(azimuth), proj)
