"""The photon position operator family r^(alpha) acting on k-space fields.

Fields are complex arrays of shape ``(n, n, n, 3)`` on a :class:`KGrid`.
The operator is applied as

    r_a^(alpha) F = omega^alpha i d_a (omega^-alpha F) + (khat x S)_a F / k
                    - (S_k F) phi_hat_a cot(theta) / k

with ``d_a`` the central difference along ``k_a``. The first term is the
grid-consistent form of ``i d_a - i alpha khat_a / k``; it makes the three
members of the family exactly similar on the grid. ``alpha_term="analytic"``
selects the pointwise ``-i alpha khat/k`` instead.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .kspace import KGrid, grid_sum, k_gradient
from .polarization import SPIN, _LEVI_CIVITA, PolarizationBasis, rotation_D_field, sigma_index

ALPHAS = (-0.5, 0.0, 0.5)

AXES = {"x": 0, "y": 1, "z": 2}

#: singular-core radius, as a fraction of k_max, excluded from residual norms
CORE_FRACTION = 0.4


def check_alpha(alpha) -> float:
    a = float(alpha)
    if a not in ALPHAS:
        raise ValueError(f"alpha must be one of -1/2, 0, +1/2, got {alpha!r}")
    return a


def _axis(axis) -> int:
    if isinstance(axis, str):
        return AXES[axis]
    if axis not in (0, 1, 2):
        raise ValueError(f"axis must be x, y, z or 0..2, got {axis!r}")
    return int(axis)


def _omega_pow(grid: KGrid, p: float) -> np.ndarray:
    return grid.omega[..., None] ** p


def _matvec(M, F):
    return np.einsum("...jl,...l->...j", M, F)


def position_eigenstate(grid: KGrid, basis: PolarizationBasis, r, sigma: int,
                        alpha: float = 0.0, t: float = 0.0) -> np.ndarray:
    """k-space samples ``omega^alpha e_sigma exp(-i k.r + i omega t) / sqrt(V)``.

    The time phase follows the creation-operator convention, so at ``t=0``
    this is the Schrodinger-picture eigenvector.
    """
    alpha = check_alpha(alpha)
    r = np.asarray(r, dtype=float)
    phase = np.exp(-1j * (grid.k @ r) + 1j * grid.omega * t) / math.sqrt(grid.volume)
    return _omega_pow(grid, alpha) * basis[sigma] * phase[..., None]


def _matrix_terms(grid: KGrid, axis: int) -> np.ndarray:
    """Pointwise 3x3 part: ``(khat x S)_a / k - S_k phi_hat_a cot(theta) / k``."""
    kxS = np.einsum("bc,...b,cjl->...jl", _LEVI_CIVITA[axis], grid.khat, SPIN.S)
    Sk = SPIN.helicity(grid.khat)
    w = (grid.phi_hat[..., axis] * grid.cot_theta)[..., None, None]
    return (kxS - Sk * w) * grid.inv_k[..., None, None]


def apply_position_operator(field: np.ndarray, grid: KGrid, alpha: float, axis,
                            alpha_term: str = "conjugated") -> np.ndarray:
    """One Cartesian component of ``r^(alpha)`` applied to a k-space field."""
    alpha = check_alpha(alpha)
    a = _axis(axis)
    if alpha_term == "conjugated":
        if alpha == 0.0:
            grad = 1j * k_gradient(field, grid, a)
        else:
            grad = _omega_pow(grid, alpha) * 1j * k_gradient(_omega_pow(grid, -alpha) * field, grid, a)
    elif alpha_term == "analytic":
        grad = 1j * k_gradient(field, grid, a)
        grad = grad - 1j * alpha * (grid.khat[..., a] * grid.inv_k)[..., None] * field
    else:
        raise ValueError(f"unknown alpha_term {alpha_term!r}")
    return grad + _matvec(_matrix_terms(grid, a), field)


def apply_factored_operator(field: np.ndarray, grid: KGrid, alpha: float, axis) -> np.ndarray:
    """Independent route: ``D omega^alpha i grad omega^-alpha D^-1`` with D per grid point."""
    alpha = check_alpha(alpha)
    a = _axis(axis)
    D = rotation_D_field(grid)
    Dinv = np.conj(np.swapaxes(D, -1, -2))
    inner = _omega_pow(grid, -alpha) * _matvec(Dinv, field)
    return _matvec(D, _omega_pow(grid, alpha) * 1j * k_gradient(inner, grid, a))


def analysis_mask(grid: KGrid, layers: int = 1, core_fraction: float = CORE_FRACTION) -> np.ndarray:
    """Points used in residual norms.

    Drops ``layers`` boundary faces per axis (one-sided stencils) and a core of
    radius ``core_fraction * k_max`` around ``k = 0`` and the z-axis, where the
    basis vectors wind once per grid cell and differences cannot resolve them.
    The core is fixed in physical units so refinement studies compare like with
    like.
    """
    n = grid.n_per_axis
    mask = np.ones(grid.shape, dtype=bool)
    if layers:
        for ax in range(3):
            sl = [slice(None)] * 3
            sl[ax] = np.r_[0:layers, n - layers:n]
            mask[tuple(sl)] = False
    if core_fraction > 0:
        r0 = core_fraction * grid.k_max
        kperp = np.hypot(grid.k[..., 0], grid.k[..., 1])
        mask &= (grid.kmag >= r0) & (kperp >= r0)
    return mask


def masked_norm(field: np.ndarray, mask: np.ndarray) -> float:
    v = np.asarray(field)[mask]
    return math.sqrt(grid_sum(np.abs(v) ** 2))


def eigenvector_residual(state: np.ndarray, grid: KGrid, r, alpha: float,
                         mask: np.ndarray | None = None, **kw) -> np.ndarray:
    """Per-axis ``||r_a psi - r_a psi|| / ||psi||`` over the analysis mask."""
    mask = analysis_mask(grid) if mask is None else mask
    norm = masked_norm(state, mask)
    out = []
    for a in range(3):
        diff = apply_position_operator(state, grid, alpha, a, **kw) - r[a] * state
        out.append(masked_norm(diff, mask) / norm)
    return np.array(out)


def transverse_part(field: np.ndarray, grid: KGrid) -> np.ndarray:
    khat = grid.khat
    return field - khat * np.einsum("...i,...i->...", khat, field)[..., None]


def longitudinal_fraction(field: np.ndarray, grid: KGrid) -> float:
    lon = np.einsum("...i,...i->...", grid.khat, field)
    total = grid_sum(np.abs(field) ** 2)
    return math.sqrt(grid_sum(np.abs(lon) ** 2) / total) if total > 0 else 0.0


def random_transverse_field(grid: KGrid, seed: int, n_terms: int = 4,
                            k0: float | None = None, k0_fraction: float = 0.5) -> np.ndarray:
    """Smooth seeded random transverse field.

    A sum of ``n_terms`` random complex polarisations times plane phases
    ``exp(-i k.r_n)`` under the envelope ``exp(-k^2/k0^2)``, projected
    transverse. The random draws do not depend on the grid, so the same seed
    and ``k0`` describe the same continuum field on every refinement level.
    """
    k0 = k0_fraction * grid.k_max if k0 is None else k0
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=(n_terms, 3)) + 1j * rng.normal(size=(n_terms, 3))
    centres = rng.uniform(-0.5, 0.5, size=(n_terms, 3)) / k0
    env = np.exp(-(grid.kmag / k0) ** 2)
    F = np.zeros(grid.shape + (3,), dtype=complex)
    for amp, rc in zip(amps, centres):
        F += amp * np.exp(-1j * (grid.k @ rc))[..., None]
    return transverse_part(F * env[..., None], grid)


def commutator_check(alpha: float, test_field: np.ndarray, grid: KGrid, axes=("x", "y"),
                     mask: np.ndarray | None = None, on_longitudinal: str = "project",
                     tol: float = 1e-10) -> float:
    """``||[r_i, r_j] F|| / ||F||`` over the analysis mask (two boundary layers)."""
    i, j = (_axis(a) for a in axes)
    lf = longitudinal_fraction(test_field, grid)
    if lf > tol:
        if on_longitudinal == "error":
            raise ValueError(f"test field is not transverse (longitudinal fraction {lf:.3g})")
        warnings.warn(f"projecting out longitudinal part (fraction {lf:.3g})", stacklevel=2)
        test_field = transverse_part(test_field, grid)
    if i == j:
        return 0.0
    mask = analysis_mask(grid, layers=2) if mask is None else mask
    rij = apply_position_operator(apply_position_operator(test_field, grid, alpha, j), grid, alpha, i)
    rji = apply_position_operator(apply_position_operator(test_field, grid, alpha, i), grid, alpha, j)
    return masked_norm(rij - rji, mask) / masked_norm(test_field, mask)


def inner_product(bra: np.ndarray, ket: np.ndarray, mode: str = "LP",
                  grid: KGrid | None = None, ket_grid: KGrid | None = None) -> complex:
    """``sum_{k,j} bra_j^* ket_j``.

    ``mode="LP"`` pairs two alpha=0 fields; ``mode="biorthonormal"`` pairs an
    alpha field with a -alpha field. The sum is the same; the caller supplies
    the pairing.
    """
    if mode not in ("LP", "biorthonormal"):
        raise ValueError(f"unknown inner-product mode {mode!r}")
    if grid is not None and ket_grid is not None and not grid.same_as(ket_grid):
        raise ValueError("bra and ket live on different grids")
    if np.shape(bra) != np.shape(ket):
        raise ValueError("bra and ket have different shapes")
    return grid_sum(np.conj(bra) * ket)


def field_theory_inner_product(bra: np.ndarray, ket: np.ndarray, grid: KGrid) -> complex:
    """``sum k^-1 bra^* ket``; diagnostic only, it gives a nonlocal density."""
    return grid_sum(np.conj(bra) * ket * grid.inv_k[..., None])


def similarity_map(field: np.ndarray, grid: KGrid, from_alpha: float, to_alpha: float) -> np.ndarray:
    """Multiply by ``omega^(to - from)``."""
    p = check_alpha(to_alpha) - check_alpha(from_alpha)
    if p == 0:
        return np.array(field, copy=True)
    return _omega_pow(grid, p) * field


@dataclass
class AdjointReport:
    alpha: float
    hermitian_defect: float
    pair_defect: float
    boundary_fraction: float


def adjoint_check(alpha: float, F: np.ndarray, G: np.ndarray, grid: KGrid, axis="x") -> AdjointReport:
    """Summation-by-parts test of ``r^(0)`` Hermiticity and ``r^(a)^+ = r^(-a)``.

    Defects are ``|<F|r G> - <r' F|G>| / (||F|| ||G|| / dk)``, where ``1/dk`` is
    the scale of the difference operator.
    """
    alpha = check_alpha(alpha)
    mask = analysis_mask(grid, layers=2, core_fraction=0)
    outer = ~mask
    bf = math.sqrt((grid_sum(np.abs(F[outer]) ** 2) + grid_sum(np.abs(G[outer]) ** 2))
                   / (grid_sum(np.abs(F) ** 2) + grid_sum(np.abs(G) ** 2)))
    if bf > 1e-8:
        warnings.warn(f"fields reach the grid boundary (fraction {bf:.2e}); summation by parts "
                      "is not exact there", stacklevel=2)
    scale = math.sqrt(grid_sum(np.abs(F) ** 2) * grid_sum(np.abs(G) ** 2)) / grid.dk

    def defect(a_left, a_right):
        lhs = inner_product(F, apply_position_operator(G, grid, a_right, axis))
        rhs = inner_product(apply_position_operator(F, grid, a_left, axis), G)
        return abs(lhs - rhs) / scale

    return AdjointReport(alpha, defect(0.0, 0.0), defect(-alpha, alpha), bf)


def compact_transverse_field(grid: KGrid, seed: int, width_fraction: float = 0.2) -> np.ndarray:
    """Random transverse field whose support sits well inside the grid."""
    F = random_transverse_field(grid, seed, k0=width_fraction * grid.k_max)
    cutoff = 0.7 * grid.k_max
    F[grid.kmag > cutoff] = 0
    return F


def convergence_order(coarse: float, fine: float, ratio: float = 2.0) -> float:
    if fine <= 0 or coarse <= 0:
        return math.inf
    return math.log(coarse / fine) / math.log(ratio)


def refinement_pair(n: int, box_length: float, constants=None):
    """Grids ``(n, L)`` and ``(2n, 2L)``: same k_max, half the spacing."""
    from .kspace import build_grid

    return build_grid(n, box_length, constants), build_grid(2 * n, 2 * box_length, constants)



__all__ = [
    "ALPHAS", "AdjointReport", "adjoint_check", "analysis_mask", "apply_factored_operator",
    "apply_position_operator", "check_alpha", "commutator_check", "compact_transverse_field",
    "convergence_order", "eigenvector_residual", "field_theory_inner_product", "inner_product",
    "masked_norm", "position_eigenstate", "random_transverse_field", "refinement_pair",
    "similarity_map", "sigma_index", "transverse_part",
]
