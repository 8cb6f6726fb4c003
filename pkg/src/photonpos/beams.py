"""Bessel and paraxial vortex beams and their angular-momentum budget.

The cycle-averaged AM density of a paraxial beam with vector potential
``A = 1/2 (x + i sigma y) u(r) exp(i l phi + i k (z - c t))`` is

    J_z(r) = eps0 omega [ l |u|^2 - sigma r d|u|^2/dr / 2 ]

whose integral over the cross-section is ``hbar (l + sigma)`` per photon for
any envelope that decays at large r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.integrate import trapezoid

from .kspace import PhysicalConstants

N_RADIAL = 2048
RADIAL_EXTENT = 8.0
EDGE_DECAY = 1e-8

_SERIES_MAX_X = 2.0


# -- Bessel functions of integer order -------------------------------------------

def _bessel_series(n: int, x: np.ndarray) -> np.ndarray:
    # sum_m (-1)^m (x/2)^(2m+n) / (m! (m+n)!)
    h = x / 2
    term = h**n / math.factorial(n)
    out = term.copy()
    for m in range(1, 40):
        term = -term * h * h / (m * (m + n))
        out = out + term
    return out


def _bessel_miller(n: int, x: np.ndarray) -> np.ndarray:
    # downward recurrence from far above max(n, x), normalized with J0 + 2 sum J_2k = 1
    top = max(n, int(np.max(x))) + 20
    top += int(math.sqrt(40 * top))
    top += top % 2
    jp = np.zeros_like(x)
    j = np.full_like(x, 1e-300)
    norm = np.zeros_like(x)
    res = np.zeros_like(x)
    for k in range(top, 0, -1):
        jm = 2 * k / x * j - jp
        jp, j = j, jm
        if k - 1 == n:
            res = j.copy()
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2 * j
        big = np.abs(j) > 1e250
        if np.any(big):
            for arr in (j, jp, norm, res):
                arr[big] *= 1e-250
    norm += j
    return res / norm


def bessel_j(n: int, x) -> np.ndarray:
    """Bessel function of the first kind ``J_n(x)`` for integer ``n`` and real ``x``."""
    if int(n) != n:
        raise ValueError("order must be an integer")
    n = int(n)
    x = np.asarray(x, dtype=float)
    sign = 1.0
    if n < 0:
        n = -n
        sign = (-1.0) ** n
    neg = x < 0
    ax = np.abs(np.atleast_1d(x)).astype(float)
    out = np.zeros_like(ax)
    small = ax <= _SERIES_MAX_X
    if np.any(small):
        out[small] = _bessel_series(n, ax[small])
    if np.any(~small):
        out[~small] = _bessel_miller(n, ax[~small])
    out = out * np.where(np.atleast_1d(neg), (-1.0) ** n, 1.0) * sign
    return out.reshape(x.shape) if x.ndim else out[0]


# -- envelopes -----------------------------------------------------------------

def gaussian_envelope(waist: float, amplitude: float = 1.0) -> Callable:
    return lambda r: amplitude * np.exp(-((r / waist) ** 2))


def flat_top_envelope(waist: float, order: int = 8, amplitude: float = 1.0) -> Callable:
    """Super-Gaussian ``exp(-(r/w)^(2 order))``: flat interior with a soft edge near ``w``."""
    return lambda r: amplitude * np.exp(-((r / waist) ** (2 * order)))


def ring_envelope(waist: float, power: int = 2, amplitude: float = 1.0) -> Callable:
    return lambda r: amplitude * (r / waist) ** power * np.exp(-((r / waist) ** 2))


ENVELOPES = {"gaussian": gaussian_envelope, "flat_top": flat_top_envelope, "ring": ring_envelope}


@dataclass(frozen=True)
class BeamSpec:
    """Monochromatic beam description.

    For ``kind="bessel"`` the transverse wave number is
    ``sqrt(omega^2/c^2 - k_z^2)``; for ``kind="paraxial"`` ``k_z`` defaults to
    ``omega/c`` and ``envelope`` gives ``u(r)``.
    """

    kind: str
    omega: float
    l_z: int = 0
    sigma: int = 1
    k_z: float | None = None
    envelope: Callable | None = None
    waist: float = 1.0
    constants: PhysicalConstants = PhysicalConstants()

    def __post_init__(self):
        if self.kind not in ("bessel", "paraxial"):
            raise ValueError(f"kind must be 'bessel' or 'paraxial', got {self.kind!r}")
        if self.sigma not in (1, -1):
            raise ValueError("sigma must be +1 or -1")
        if int(self.l_z) != self.l_z:
            raise ValueError("l_z must be an integer")
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        k0 = self.omega / self.constants.c
        kz = k0 if self.k_z is None else float(self.k_z)
        if self.kind == "bessel" and not (0 < kz <= k0):
            raise ValueError(f"bessel beams need 0 < k_z <= omega/c = {k0}, got {kz}")
        object.__setattr__(self, "k_z", kz)
        if self.kind == "paraxial" and self.envelope is None:
            object.__setattr__(self, "envelope", gaussian_envelope(self.waist))

    @property
    def k_perp(self) -> float:
        k0 = self.omega / self.constants.c
        return math.sqrt(max(k0 * k0 - self.k_z**2, 0.0))


def radial_grid(waist: float, n: int = N_RADIAL, extent: float = RADIAL_EXTENT) -> np.ndarray:
    """Uniform radii from 0 to ``extent`` waists."""
    return np.linspace(0.0, extent * waist, n)


def bessel_mode(spec: BeamSpec, r, phi=0.0, z=0.0, t=0.0) -> np.ndarray:
    """``exp(-i omega t + i l phi + i k_z z) J_l(k_perp r)``."""
    if spec.kind != "bessel":
        raise ValueError("bessel_mode needs a bessel BeamSpec")
    r = np.asarray(r, dtype=float)
    phase = np.exp(1j * (-spec.omega * t + spec.l_z * np.asarray(phi) + spec.k_z * np.asarray(z)))
    return phase * bessel_j(spec.l_z, spec.k_perp * r)


def helmholtz_residual(spec: BeamSpec, r: np.ndarray) -> float:
    """Relative interior residual of ``(lap + omega^2/c^2)`` applied to a Bessel mode.

    The radial Laplacian ``f'' + f'/r - l^2 f / r^2`` uses fourth-order
    central differences; the axial part contributes ``-k_z^2``.
    """
    r = np.asarray(r, dtype=float)
    h = r[1] - r[0]
    f = bessel_j(spec.l_z, spec.k_perp * r)
    d1 = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    d2 = (-f[:-4] + 16 * f[1:-3] - 30 * f[2:-2] + 16 * f[3:-1] - f[4:]) / (12 * h * h)
    rc, fc = r[2:-2], f[2:-2]
    k0 = spec.omega / spec.constants.c
    lap = d2 + d1 / rc - spec.l_z**2 * fc / rc**2 - spec.k_z**2 * fc
    res = lap + k0 * k0 * fc
    return float(np.max(np.abs(res)) / (k0 * k0 * np.max(np.abs(fc))))


def _check_decay(u2: np.ndarray):
    if u2[-1] > EDGE_DECAY**2 * u2.max():
        raise ValueError("envelope has not decayed to 1e-8 of its maximum at the radial grid edge")


def paraxial_field(spec: BeamSpec, r, phi=0.0, z=0.0, t=0.0) -> np.ndarray:
    """``A^(+) = 1/2 (x + i sigma y) u(r) exp(i l phi + i k_z (z - c t))``, shape ``(..., 3)``."""
    if spec.kind != "paraxial":
        raise ValueError("paraxial_field needs a paraxial BeamSpec")
    r = np.asarray(r, dtype=float)
    u = spec.envelope(r) * np.exp(1j * (spec.l_z * np.asarray(phi)
                                        + spec.k_z * (np.asarray(z) - spec.constants.c * t)))
    pol = np.array([1.0, 1j * spec.sigma, 0.0]) / 2
    return u[..., None] * pol


def beam_wave_function(spec: BeamSpec, r, phi=0.0, z=0.0, t=0.0) -> np.ndarray:
    """``Psi^(-1/2) = sqrt(2 eps0 / hbar) A^(+)``."""
    k = spec.constants
    return math.sqrt(2 * k.eps0 / k.hbar) * paraxial_field(spec, r, phi, z, t)


def beam_density(spec: BeamSpec, r) -> np.ndarray:
    """``n^(1/2) = eps0 omega |u|^2 / hbar``."""
    k = spec.constants
    return k.eps0 * spec.omega * np.abs(spec.envelope(np.asarray(r, dtype=float))) ** 2 / k.hbar


@dataclass(frozen=True, eq=False)
class AMProfile:
    r: np.ndarray
    u2: np.ndarray
    n: np.ndarray
    orbital: np.ndarray
    spin: np.ndarray
    hbar: float

    @property
    def total(self) -> np.ndarray:
        return self.orbital + self.spin

    def integrate(self, f: np.ndarray) -> float:
        return float(trapezoid(2 * math.pi * self.r * f, self.r))

    def cumulative(self, f: np.ndarray) -> np.ndarray:
        g = 2 * math.pi * self.r * f
        return np.concatenate([[0.0], np.cumsum((g[1:] + g[:-1]) / 2 * np.diff(self.r))])

    @property
    def photons(self) -> float:
        return self.integrate(self.n)

    @property
    def per_photon(self) -> float:
        """Total AM per photon in units of hbar."""
        return self.integrate(self.total) / (self.hbar * self.photons)

    @property
    def spin_per_photon(self) -> float:
        return self.integrate(self.spin) / (self.hbar * self.photons)

    @property
    def orbital_per_photon(self) -> float:
        return self.integrate(self.orbital) / (self.hbar * self.photons)


def _profile(spec: BeamSpec, r: np.ndarray, u2: np.ndarray) -> AMProfile:
    k = spec.constants
    du2 = np.gradient(u2, r)
    orbital = k.eps0 * spec.omega * spec.l_z * u2
    spin = -0.5 * k.eps0 * spec.omega * spec.sigma * r * du2
    n = k.eps0 * spec.omega * u2 / k.hbar
    return AMProfile(r, u2, n, orbital, spin, k.hbar)


def am_density(spec: BeamSpec, r: np.ndarray | None = None) -> AMProfile:
    """Orbital and spin parts of ``J_z(r)`` on a radial grid (central differences in r)."""
    if spec.kind != "paraxial":
        raise ValueError("am_density needs a paraxial BeamSpec")
    r = radial_grid(spec.waist) if r is None else np.asarray(r, dtype=float)
    u2 = np.abs(spec.envelope(r)) ** 2
    _check_decay(u2)
    return _profile(spec, r, u2)


@dataclass(frozen=True, eq=False)
class ApertureReport:
    before: AMProfile
    after: AMProfile
    radius: float
    edge_index: int
    edge_spike: float
    transmitted_fraction: float


def aperture_demo(spec: BeamSpec, aperture_radius: float, r: np.ndarray | None = None) -> ApertureReport:
    """Truncate the envelope at ``aperture_radius`` and compare AM before and after.

    The truncated profile is zero beyond the aperture, so the spin term
    concentrates in a spike at the new edge.
    """
    r = radial_grid(spec.waist) if r is None else np.asarray(r, dtype=float)
    if not 0 < aperture_radius <= r[-1]:
        raise ValueError(f"aperture radius must lie in (0, {r[-1]}]")
    before = am_density(spec, r)
    u2 = np.where(r <= aperture_radius, before.u2, 0.0)
    after = _profile(spec, r, u2)
    i = int(np.searchsorted(r, aperture_radius))
    lo, hi = max(i - 2, 0), min(i + 3, len(r))
    window = after.spin[lo:hi]
    k = lo + int(np.argmax(np.abs(window)))
    return ApertureReport(before, after, float(aperture_radius), k, float(after.spin[k]),
                          after.photons / before.photons)


def with_envelope(spec: BeamSpec, name: str, **kw) -> BeamSpec:
    """Copy of ``spec`` with a named envelope (gaussian, flat_top, ring) at the beam's waist."""
    if name not in ENVELOPES:
        raise ValueError(f"unknown envelope {name!r}; expected one of {sorted(ENVELOPES)}")
    return replace(spec, envelope=ENVELOPES[name](spec.waist, **kw))
