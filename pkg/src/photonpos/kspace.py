"""Wave-vector grids, per-point spherical geometry and k-space calculus.

Grid points sit at ``(j - n//2 + 1/2) * dk`` along each axis, so no point has
``k = 0`` and none lies on the z-axis. The conjugate real-space grid is
box-centred with spacing ``L / n`` and contains the origin for even ``n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

POLE_TOL = 1e-12

_FFT_WORKERS = 1


class PoleError(ValueError):
    """Raised when a grid point has ``k = 0`` or lies on the z-axis."""

    def __init__(self, message: str, points=None):
        super().__init__(message)
        self.points = np.zeros((0, 3)) if points is None else np.asarray(points)


def set_fft_workers(n: int) -> None:
    """Number of threads handed to ``scipy.fft`` for 3-D transforms."""
    global _FFT_WORKERS
    _FFT_WORKERS = max(1, int(n))


@dataclass(frozen=True)
class PhysicalConstants:
    c: float = 1.0
    hbar: float = 1.0
    eps0: float = 1.0
    mu0: float = 1.0

    def __post_init__(self):
        for name in ("c", "hbar", "eps0", "mu0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if abs(self.c**2 * self.eps0 * self.mu0 - 1.0) > 1e-12:
            raise ValueError("constants must satisfy c^2 eps0 mu0 = 1")

    @classmethod
    def natural(cls) -> "PhysicalConstants":
        return cls()

    @classmethod
    def si(cls) -> "PhysicalConstants":
        c = 299_792_458.0
        mu0 = 1.25663706212e-6
        # eps0 derived from c and mu0 so the vacuum relation holds to rounding
        return cls(c=c, hbar=1.054571817e-34, eps0=1.0 / (mu0 * c * c), mu0=mu0)

    @classmethod
    def from_units(cls, units: str) -> "PhysicalConstants":
        if units == "natural":
            return cls.natural()
        if units == "si":
            return cls.si()
        raise ValueError(f"unknown units {units!r}; expected 'natural' or 'si'")


def spherical_frame(k):
    """Return ``(khat, theta_hat, phi_hat, theta, phi)`` for wave vector(s) ``k``.

    ``k`` may be a single 3-vector or an array with trailing dimension 3.
    Raises :class:`PoleError` where ``|k| = 0`` or ``sin(theta) < 1e-12``.
    """
    k = np.asarray(k, dtype=float)
    kmag = np.linalg.norm(k, axis=-1)
    kperp = np.hypot(k[..., 0], k[..., 1])
    with np.errstate(invalid="ignore", divide="ignore"):
        sin_theta = np.where(kmag > 0, kperp / np.where(kmag > 0, kmag, 1.0), 0.0)
    bad = sin_theta < POLE_TOL
    if np.any(bad):
        pts = k[bad] if k.ndim > 1 else k[None, :]
        raise PoleError(
            f"{len(pts)} wave vector(s) at k=0 or on the z-axis, e.g. {pts[:4].tolist()}",
            pts,
        )
    theta = np.arctan2(kperp, k[..., 2])
    phi = np.arctan2(k[..., 1], k[..., 0])
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    khat = k / kmag[..., None]
    theta_hat = np.stack([ct * cp, ct * sp, -st], axis=-1)
    phi_hat = np.stack([-sp, cp, np.zeros_like(sp)], axis=-1)
    return khat, theta_hat, phi_hat, theta, phi


@dataclass(frozen=True, eq=False)
class KGrid:
    """Cartesian wave-vector grid with dense per-point geometry.

    Arrays are indexed ``[ix, iy, iz]`` with vectors in a trailing axis of
    length 3. All arrays are read-only.
    """

    n_per_axis: int
    box_length: float
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    offset: bool = True

    def __post_init__(self):
        n, L = self.n_per_axis, self.box_length
        if int(n) != n or n < 2:
            raise ValueError(f"n_per_axis must be an integer >= 2, got {n!r}")
        if not L > 0:
            raise ValueError(f"box_length must be positive, got {L!r}")
        object.__setattr__(self, "n_per_axis", int(n))
        shift = 0.5 if self.offset else 0.0
        axis = (np.arange(n) - n // 2 + shift) * self.dk
        kx, ky, kz = np.meshgrid(axis, axis, axis, indexing="ij")
        k = np.stack([kx, ky, kz], axis=-1)
        khat, th_hat, ph_hat, theta, phi = spherical_frame(k)
        kmag = np.linalg.norm(k, axis=-1)
        geo = dict(
            k_axis=axis,
            k=k,
            kmag=kmag,
            omega=self.constants.c * kmag,
            khat=khat,
            theta_hat=th_hat,
            phi_hat=ph_hat,
            theta=theta,
            phi=phi,
            inv_k=1.0 / kmag,
            cot_theta=np.cos(theta) / np.sin(theta),
        )
        for name, arr in geo.items():
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        r_axis = (np.arange(n) - n // 2) * self.dr
        r_axis.setflags(write=False)
        object.__setattr__(self, "r_axis", r_axis)

    @property
    def dk(self) -> float:
        return 2 * math.pi / self.box_length

    @property
    def dr(self) -> float:
        return self.box_length / self.n_per_axis

    @property
    def volume(self) -> float:
        return self.box_length**3

    @property
    def dV(self) -> float:
        return self.dr**3

    @property
    def shape(self) -> tuple[int, int, int]:
        n = self.n_per_axis
        return (n, n, n)

    @property
    def size(self) -> int:
        return self.n_per_axis**3

    @property
    def k_max(self) -> float:
        return float(np.max(np.abs(self.k_axis)))

    def r_points(self) -> np.ndarray:
        """Box-centred real-space points, shape ``(n, n, n, 3)``."""
        x, y, z = np.meshgrid(self.r_axis, self.r_axis, self.r_axis, indexing="ij")
        return np.stack([x, y, z], axis=-1)

    def same_as(self, other: "KGrid") -> bool:
        return (
            self is other
            or (
                self.n_per_axis == other.n_per_axis
                and self.box_length == other.box_length
                and self.offset == other.offset
                and self.constants == other.constants
            )
        )


def build_grid(n_per_axis: int, box_length: float, constants: PhysicalConstants | None = None,
               offset: bool = True) -> KGrid:
    return KGrid(n_per_axis, box_length, constants or PhysicalConstants(), offset)


def check_same_grid(*grids: KGrid) -> None:
    first = grids[0]
    for g in grids[1:]:
        if not first.same_as(g):
            raise ValueError("fields live on different grids")


def grid_sum(values) -> complex | float:
    """Order-independent sum using correctly rounded accumulation.

    ``math.fsum`` is exact up to the final rounding, so any permutation of the
    input yields the identical result.
    """
    v = np.ravel(np.asarray(values))
    if np.iscomplexobj(v):
        return complex(math.fsum(v.real.tolist()), math.fsum(v.imag.tolist()))
    return math.fsum(v.tolist())


def k_gradient(field: np.ndarray, grid: KGrid, axis: int) -> np.ndarray:
    """Central-difference derivative along ``k_axis`` (second-order one-sided at faces)."""
    return np.gradient(field, grid.dk, axis=axis, edge_order=2)


def _phase_ramps(grid: KGrid):
    # k_m r_j = (2 pi / n) [m j - m h + s (j - h)] with k_m = (m + s) dk, r_j = (j - h) dr
    n = grid.n_per_axis
    h = n // 2
    s = (0.5 if grid.offset else 0.0) - h
    idx = np.arange(n)
    pre = np.exp(-2j * np.pi * idx * h / n)
    post = np.exp(2j * np.pi * s * (idx - h) / n)
    return pre, post


def fourier_to_rspace(field: np.ndarray, grid: KGrid) -> np.ndarray:
    """Evaluate ``sum_k F(k) exp(ik.r) / sqrt(V)`` on the conjugate real-space grid.

    ``field`` has shape ``(n, n, n)`` or ``(n, n, n, c)``; components are
    transformed independently.
    """
    field = np.asarray(field)
    pre, post = _phase_ramps(grid)
    out = field.astype(complex, copy=True)
    for ax in range(3):
        shp = [1] * out.ndim
        shp[ax] = -1
        out = out * pre.reshape(shp)
    out = scipy.fft.ifftn(out, axes=(0, 1, 2), norm="forward", workers=_FFT_WORKERS)
    for ax in range(3):
        shp = [1] * out.ndim
        shp[ax] = -1
        out = out * post.reshape(shp)
    return out / math.sqrt(grid.volume)


def fourier_to_kspace(values: np.ndarray, grid: KGrid) -> np.ndarray:
    """Exact inverse of :func:`fourier_to_rspace`."""
    values = np.asarray(values)
    pre, post = _phase_ramps(grid)
    out = values.astype(complex, copy=True)
    for ax in range(3):
        shp = [1] * out.ndim
        shp[ax] = -1
        out = out / post.reshape(shp)
    out = scipy.fft.fftn(out, axes=(0, 1, 2), norm="forward", workers=_FFT_WORKERS)
    for ax in range(3):
        shp = [1] * out.ndim
        shp[ax] = -1
        out = out / pre.reshape(shp)
    return out * math.sqrt(grid.volume)


def direct_rspace_sum(field: np.ndarray, grid: KGrid) -> np.ndarray:
    """O(N^2) reference evaluation of :func:`fourier_to_rspace`."""
    k = grid.k.reshape(-1, 3)
    r = grid.r_points().reshape(-1, 3)
    kern = np.exp(1j * r @ k.T) / math.sqrt(grid.volume)
    f = np.asarray(field).reshape(grid.size, -1)
    out = kern @ f
    return out.reshape(np.asarray(field).shape)
