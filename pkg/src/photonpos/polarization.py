"""Spin-1 matrices, the frame rotation D and helicity polarization bases."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .kspace import KGrid

SIGMAS = (1, -1)

_LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _LEVI_CIVITA[_i, _j, _k] = 1.0
    _LEVI_CIVITA[_i, _k, _j] = -1.0


class SpinMatrices:
    """Cartesian spin-1 operators ``(S_i)_{jk} = -i eps_{ijk}``."""

    def __init__(self):
        self.S = -1j * _LEVI_CIVITA
        self.S.setflags(write=False)

    @property
    def Sx(self):
        return self.S[0]

    @property
    def Sy(self):
        return self.S[1]

    @property
    def Sz(self):
        return self.S[2]

    def helicity(self, khat) -> np.ndarray:
        """``khat . S`` for one or many unit vectors (trailing matrix axes)."""
        return np.einsum("...i,ijk->...jk", np.asarray(khat, dtype=float), self.S)


SPIN = SpinMatrices()


def sigma_index(sigma: int) -> int:
    if sigma == 1:
        return 0
    if sigma == -1:
        return 1
    raise ValueError(f"helicity must be +1 or -1, got {sigma!r}")


def spin_rotation(axis, angle: float) -> np.ndarray:
    """``exp(-i (n.S) angle)`` in closed (Rodrigues) form.

    For the Cartesian spin-1 generators ``-i n.S`` is the real cross-product
    matrix of ``n``, so the exponential is an ordinary rotation by ``angle``.
    """
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    K = np.real(-1j * np.einsum("i,ijk->jk", n, SPIN.S))
    R = np.eye(3) + math.sin(angle) * K + (1.0 - math.cos(angle)) * (K @ K)
    return R.astype(complex)


def rotation_D(theta: float, phi: float) -> np.ndarray:
    """``D = exp(-i S_z phi) exp(-i S_y theta)``; maps x, y, z to theta_hat, phi_hat, khat."""
    return spin_rotation((0, 0, 1), phi) @ spin_rotation((0, 1, 0), theta)


def rotation_D_field(grid: KGrid) -> np.ndarray:
    """D at every grid point, shape ``(n, n, n, 3, 3)``; columns are theta_hat, phi_hat, khat."""
    return np.stack([grid.theta_hat, grid.phi_hat, grid.khat], axis=-1).astype(complex)


@dataclass(frozen=True, eq=False)
class PolarizationBasis:
    """Helicity unit vectors ``e[s]`` for ``sigma = SIGMAS[s]`` at every grid point.

    ``vectors`` has shape ``(2, n, n, n, 3)``. ``chi_label`` records how the
    basis was produced, e.g. ``"zero"`` or ``"m_phi:1"``.
    """

    grid: KGrid
    vectors: np.ndarray
    chi_label: str = "zero"
    m: int | None = None

    def __getitem__(self, sigma: int) -> np.ndarray:
        return self.vectors[sigma_index(sigma)]


def helicity_vectors_e0(grid: KGrid) -> PolarizationBasis:
    """``e0 = (theta_hat + i sigma phi_hat) / sqrt(2)`` for both helicities."""
    vecs = np.stack(
        [(grid.theta_hat + 1j * s * grid.phi_hat) / math.sqrt(2) for s in SIGMAS]
    )
    vecs.setflags(write=False)
    return PolarizationBasis(grid, vecs, "zero", 0)


def longitudinal_vectors(grid: KGrid) -> np.ndarray:
    """The sigma = 0 vector ``khat``; not part of any physical basis."""
    return grid.khat.astype(complex)


def apply_chi(basis: PolarizationBasis, chi: Callable | int | None = None, *,
              m: int | None = None) -> PolarizationBasis:
    """Rotate the basis about k: ``e_chi = exp(-i sigma chi(theta, phi)) e0``.

    Pass either a callable ``chi(theta, phi)`` or an integer ``m`` for the
    family ``chi = -m phi``.
    """
    if basis.chi_label != "zero":
        raise ValueError("apply_chi expects the e0 basis")
    if isinstance(chi, (int, np.integer)) and m is None:
        m, chi = int(chi), None
    grid = basis.grid
    if m is not None:
        if int(m) != m:
            raise ValueError("m must be an integer")
        m = int(m)
        chi_vals = -m * grid.phi
        label = f"m_phi:{m}"
    elif chi is not None:
        chi_vals = np.asarray(chi(grid.theta, grid.phi), dtype=float)
        label = "custom"
    else:
        return basis
    vecs = np.stack(
        [np.exp(-1j * s * chi_vals)[..., None] * basis.vectors[i] for i, s in enumerate(SIGMAS)]
    )
    vecs.setflags(write=False)
    return PolarizationBasis(grid, vecs, label, m)


def make_basis(grid: KGrid, m: int | None = None) -> PolarizationBasis:
    base = helicity_vectors_e0(grid)
    return base if not m else apply_chi(base, m=m)


def em_expansion(theta, phi, m: int, sigma: int) -> np.ndarray:
    """Three-term Cartesian expansion of ``e^(-m phi)`` written out term by term."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    xm = np.array([1, -1j, 0])
    xp = np.array([1, 1j, 0])
    z = np.array([0, 0, 1])
    a = ((np.cos(theta) - sigma) * np.exp(1j * (m * sigma + 1) * phi))[..., None]
    b = (np.sin(theta) * np.exp(1j * m * sigma * phi))[..., None]
    c = ((np.cos(theta) + sigma) * np.exp(1j * (m * sigma - 1) * phi))[..., None]
    r2 = 2 * math.sqrt(2)
    return xm * a / r2 - z * b / math.sqrt(2) + xp * c / r2


class AMEntry(NamedTuple):
    s_z: int
    l_z: int
    amplitude: float


def am_decomposition(theta: float, m: int, sigma: int) -> tuple[AMEntry, AMEntry, AMEntry]:
    """Spin/orbital content of ``e^(-m phi)`` at polar angle ``theta``.

    Every entry carries ``s_z + l_z = m sigma``.
    """
    sigma_index(sigma)
    ct, st = math.cos(theta), math.sin(theta)
    return (
        AMEntry(-1, m * sigma + 1, (ct - sigma) / 2),
        AMEntry(0, m * sigma, st / math.sqrt(2)),
        AMEntry(1, m * sigma - 1, (ct + sigma) / 2),
    )
