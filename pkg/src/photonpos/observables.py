"""Densities, currents and conserved-quantity functionals built from wave functions.

All integrals are Riemann sums on the conjugate real-space grid. Imaginary
parts of quantities that should be real are returned alongside the real part
rather than dropped.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .kspace import KGrid, fourier_to_rspace, grid_sum
from .polarization import SIGMAS, SPIN, PolarizationBasis
from .quantum import (
    FieldSet, PhotonState, TwoPhotonWaveField, fields_from_state, rspace_norm,
    synthesize_one_photon,
)

#: bandwidth beyond which the narrowband Glauber approximation is flagged
GLAUBER_BANDWIDTH_LIMIT = 0.5


def _as_list(x):
    return list(x) if isinstance(x, (list, tuple)) else [x]


def _fsum_vec(arr: np.ndarray) -> np.ndarray:
    return np.array([grid_sum(arr[..., i]) for i in range(arr.shape[-1])])


@dataclass(frozen=True, eq=False)
class DensityReport:
    """Number and current densities for one alpha.

    ``n`` is complex for alpha != 0; ``n_real`` is its real part.
    """

    alpha: float
    n: np.ndarray
    j: np.ndarray
    n_real: np.ndarray
    total_n: complex
    total_j: np.ndarray
    dV: float

    @property
    def imaginary_defect(self) -> float:
        return abs(self.total_n.imag)


def density(psi_a, psi_ma) -> DensityReport:
    """``n = sum_s Psi^(a)* . Psi^(-a)`` and ``j = -i c sum_s s Psi^(a)* x Psi^(-a)``.

    Arguments are a WaveField or a sequence of WaveFields, one per helicity,
    paired in order.
    """
    pa, pm = _as_list(psi_a), _as_list(psi_ma)
    if len(pa) != len(pm):
        raise ValueError("need one -alpha field per alpha field")
    g = pa[0].grid
    alpha = pa[0].alpha
    n = np.zeros(g.shape, dtype=complex)
    j = np.zeros(g.shape + (3,), dtype=complex)
    for a, m in zip(pa, pm):
        if a.alpha != alpha or m.alpha != -alpha:
            raise ValueError("alpha labels must be (a, -a) for every pair")
        if a.sigma != m.sigma or a.t != m.t or not (a.grid.same_as(g) and m.grid.same_as(g)):
            raise ValueError("paired fields differ in helicity, time or grid")
        va = a.values.conj()
        vm = m.values
        n += np.sum(va * vm, axis=-1)
        j += -1j * a.sigma * g.constants.c * np.cross(va, vm)
    return DensityReport(alpha, n, j, n.real.copy(), grid_sum(n) * g.dV, _fsum_vec(j) * g.dV, g.dV)


def state_density(state: PhotonState, basis: PolarizationBasis, alpha: float, t: float = 0.0) -> DensityReport:
    """Density of a one-photon state summed over both helicities."""
    pa = [synthesize_one_photon(state, basis, alpha, s, t) for s in SIGMAS]
    pm = [synthesize_one_photon(state, basis, -alpha, s, t) for s in SIGMAS]
    return density(pa, pm)


def continuity_residual(state: PhotonState, basis: PolarizationBasis, alpha: float,
                        t: float = 0.0) -> tuple[np.ndarray, float]:
    """Pointwise ``dn/dt + div j`` and its real-space norm.

    Time derivatives and curls are applied to each factor in k-space and the
    divergence of the cross product is expanded as
    ``div(a x b) = b . curl a - a . curl b``, so no product is differentiated
    on the grid.
    """
    g = state.grid
    c = g.constants.c
    res = np.zeros(g.shape, dtype=complex)
    for s in SIGMAS:
        a = synthesize_one_photon(state, basis, alpha, s, t)
        m = synthesize_one_photon(state, basis, -alpha, s, t)
        av, mv = a.values, m.values
        dta = fourier_to_rspace(a.time_derivative(), g)
        dtm = fourier_to_rspace(m.time_derivative(), g)
        cura = fourier_to_rspace(a.curl(), g)
        curm = fourier_to_rspace(m.curl(), g)
        dn = np.sum(dta.conj() * mv + av.conj() * dtm, axis=-1)
        divj = -1j * s * c * np.sum(mv * cura.conj() - av.conj() * curm, axis=-1)
        res += dn + divj
    return res, math.sqrt(grid_sum(np.abs(res) ** 2) * g.dV)


def two_photon_marginal(two_a: TwoPhotonWaveField, two_ma: TwoPhotonWaveField) -> dict:
    """One-photon marginal of a two-photon state, summed over the unobserved photon.

    Returns ``{sigma: n_sigma(r)}`` on the coarse points plus ``"total"``, the
    integral over r of both helicities.
    """
    if two_a.coarsening != two_ma.coarsening or not two_a.grid.same_as(two_ma.grid):
        raise ValueError("coarsening or grid mismatch")
    if two_a.alpha != -two_ma.alpha or two_a.t != two_ma.t:
        raise ValueError("need alpha and -alpha fields at equal time")
    dV = two_a.cell_volume
    out = {}
    for s in SIGMAS:
        n = np.zeros(len(two_a.r_points), dtype=complex)
        for s2 in SIGMAS:
            key = (s, s2)
            if key in two_a.blocks and key in two_ma.blocks:
                n += np.einsum("ajbk,ajbk->a", two_a.blocks[key].conj(), two_ma.blocks[key]) * dV
        out[s] = n
    out["total"] = (grid_sum(out[1]) + grid_sum(out[-1])) * dV
    return out


# -- momentum and angular momentum ----------------------------------------------

def _sum_fields(fields) -> tuple[KGrid, np.ndarray, np.ndarray]:
    fs = _as_list(fields)
    g = fs[0].grid
    A = sum(f.A for f in fs)
    D = sum(f.D for f in fs)
    return g, A, D


@dataclass(frozen=True)
class VectorResult:
    value: np.ndarray
    imaginary: np.ndarray
    orbital: np.ndarray | None = None
    spin: np.ndarray | None = None


def momentum_functional(fields: FieldSet | Sequence[FieldSet]) -> VectorResult:
    """``P = -2i int D^(+)* . (i grad) A^(+)`` with a spectral gradient.

    The factor 2 makes ``P`` the expectation value ``sum hbar k |c|^2``.
    """
    g, A, D = _sum_fields(fields)
    Dr = fourier_to_rspace(D, g).conj()
    P = np.zeros(3, dtype=complex)
    for a in range(3):
        dA = fourier_to_rspace(1j * g.k[..., a][..., None] * A, g)
        P[a] = 2 * grid_sum(np.sum(Dr * dA, axis=-1)) * g.dV
    return VectorResult(P.real, P.imag)


def angular_momentum_functional(fields: FieldSet | Sequence[FieldSet], origin=(0.0, 0.0, 0.0)) -> VectorResult:
    """``J = 2i int D^(+)* . (-(r - o) x i grad + S) A^(+)``.

    Orbital part from spectral gradients weighted by box-centred ``r - o``;
    spin part pointwise. ``J(o) = J(0) - o x P`` holds exactly.
    """
    g, A, D = _sum_fields(fields)
    Dc = fourier_to_rspace(D, g).conj()
    Ar = fourier_to_rspace(A, g)
    r = g.r_points() - np.asarray(origin, dtype=float)
    grads = [fourier_to_rspace(1j * g.k[..., c][..., None] * A, g) for c in range(3)]
    L = np.zeros(3, dtype=complex)
    S = np.zeros(3, dtype=complex)
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        orb = r[..., b, None] * grads[c] - r[..., c, None] * grads[b]
        spin = np.einsum("il,...l->...i", SPIN.S[a], Ar)
        L[a] = 2 * grid_sum(np.sum(Dc * orb, axis=-1)) * g.dV
        S[a] = 2j * grid_sum(np.sum(Dc * spin, axis=-1)) * g.dV
    J = L + S
    return VectorResult(J.real, J.imag, L.real, S.real)


def mode_sum_momentum(state: PhotonState) -> np.ndarray:
    """``sum_s sum_k hbar k |c_{k,s}|^2``."""
    g = state.grid
    w = np.sum(np.abs(state.c1) ** 2, axis=0)
    return g.constants.hbar * _fsum_vec(g.k * w[..., None])


def cycle_averaged_angular_momentum(fields: FieldSet | Sequence[FieldSet], origin=(0.0, 0.0, 0.0)) -> np.ndarray:
    """``eps0 int r x <E x B>`` for the real fields ``E = 2 Re E^(+)``, ``B = 2 Re B^(+)``.

    Uses the cycle average ``<E x B> = 2 Re(E^(+) x B^(+)*)``.
    """
    fs = _as_list(fields)
    g = fs[0].grid
    E = fourier_to_rspace(sum(f.E for f in fs), g)
    B = fourier_to_rspace(sum(f.B for f in fs), g)
    S = 2 * np.real(np.cross(E, B.conj()))
    r = g.r_points() - np.asarray(origin, dtype=float)
    return fs[0].constants.eps0 * _fsum_vec(np.cross(r, S)) * g.dV


def state_fields(state: PhotonState, basis: PolarizationBasis, t: float = 0.0) -> list[FieldSet]:
    return [fields_from_state(state, basis, s, t) for s in SIGMAS]


# -- Glauber comparison ------------------------------------------------------------

def spectral_moments(state: PhotonState) -> tuple[float, float]:
    """``(omega_bar, delta_omega)``: mean and rms frequency weighted by ``|c|^2``."""
    return state.spectral_moments()


def detector_mask(grid: KGrid, detector: dict | None) -> np.ndarray:
    """Slab of thickness ``dz`` and square area ``dA`` centred on ``position``.

    ``None`` selects the whole box. An empty region falls back to the grid
    point nearest ``position``.
    """
    if detector is None:
        return np.ones(grid.shape, dtype=bool)
    extra = set(detector) - {"position", "dz", "dA"}
    if extra:
        raise ValueError(f"unknown detector keys {sorted(extra)}")
    pos = np.asarray(detector.get("position", (0.0, 0.0, 0.0)), dtype=float)
    d = grid.r_points() - pos
    half = math.sqrt(float(detector.get("dA", grid.box_length**2))) / 2
    mask = ((np.abs(d[..., 2]) <= float(detector.get("dz", grid.box_length)) / 2)
            & (np.abs(d[..., 0]) <= half) & (np.abs(d[..., 1]) <= half))
    if not mask.any():
        mask[np.unravel_index(np.argmin(np.sum(d**2, axis=-1)), grid.shape)] = True
    return mask


@dataclass(frozen=True, eq=False)
class GlauberReport:
    omega_bar: float
    bandwidth: float
    ratio: float
    deviation: float
    pointwise_ratio: np.ndarray
    n_glauber: np.ndarray
    n_half: np.ndarray


def _warn_bandwidth(bw: float):
    if bw > GLAUBER_BANDWIDTH_LIMIT:
        warnings.warn(f"bandwidth {bw:.3g} exceeds {GLAUBER_BANDWIDTH_LIMIT}; "
                      "the narrowband Glauber approximation does not apply", UserWarning, stacklevel=3)


def glauber_comparison(state: PhotonState, basis: PolarizationBasis, detector: dict | None = None,
                       t: float = 0.0, omega_bar: float | None = None) -> GlauberReport:
    """Compare the Glauber count density with ``Re n^(1/2)`` over a detector region.

    The Glauber density is ``2 eps0 |E^(+)|^2 / (hbar omega_bar)`` with
    ``omega_bar`` the mean frequency (or the value supplied); it coincides
    with ``Re n^(1/2)`` for a monochromatic state. ``bandwidth`` is
    ``delta_omega / omega_bar``.

    Over the whole box the ratio is exactly 1 by the definition of
    ``omega_bar``, so a finite detector is what makes the comparison useful.
    """
    g = state.grid
    k = g.constants
    wbar, dw = spectral_moments(state)
    if omega_bar is not None:
        wbar = float(omega_bar)
    bw = dw / wbar
    _warn_bandwidth(bw)
    fs = state_fields(state, basis, t)
    E = fourier_to_rspace(sum(f.E for f in fs), g)
    nG = 2 * k.eps0 * np.sum(np.abs(E) ** 2, axis=-1) / (k.hbar * wbar)
    nh = state_density(state, basis, 0.5, t).n_real
    mask = detector_mask(g, detector)
    ratio = grid_sum(nG[mask]) / grid_sum(nh[mask])
    with np.errstate(divide="ignore", invalid="ignore"):
        pw = np.where(mask, nG / nh, np.nan)
    return GlauberReport(wbar, bw, ratio, abs(ratio - 1), pw, nG, nh)


@dataclass(frozen=True, eq=False)
class PulseSpectrum:
    """Normally incident plane-wave pulse: amplitudes ``c`` on positive ``k_z`` samples."""

    kz: np.ndarray
    c: np.ndarray
    constants: object

    @property
    def omega(self) -> np.ndarray:
        return self.constants.c * self.kz

    def moments(self) -> tuple[float, float]:
        p = np.abs(self.c) ** 2
        p = p / math.fsum(p)
        wbar = math.fsum(p * self.omega)
        return wbar, math.sqrt(math.fsum(p * (self.omega - wbar) ** 2))

    def wave_function(self, alpha: float, z: np.ndarray, t: float = 0.0) -> np.ndarray:
        """Scalar amplitude ``sum_k c omega^alpha exp(i k z - i omega t)`` (per unit area)."""
        ph = np.exp(1j * (np.outer(np.atleast_1d(z), self.kz) - self.omega * t))
        return ph @ (self.c * self.omega**alpha)


def gaussian_pulse(omega_bar: float, bandwidth: float, constants=None, n_modes: int = 4001,
                   span: float = 8.0) -> PulseSpectrum:
    """Gaussian spectrum with ``|c|^2`` of rms ``bandwidth * omega_bar`` in frequency.

    Samples cover ``span`` rms widths on each side, clipped to ``k_z > 0``.
    """
    from .kspace import PhysicalConstants
    k = constants or PhysicalConstants()
    kbar = omega_bar / k.c
    s = bandwidth * kbar
    kz = np.linspace(kbar - span * s, kbar + span * s, n_modes)
    kz = kz[kz > 0]
    return PulseSpectrum(kz, np.exp(-(kz - kbar) ** 2 / (4 * s * s)).astype(complex), k)


@dataclass(frozen=True)
class PulseGlauberReport:
    omega_bar: float
    bandwidth: float
    ratio: float
    deviation: float


def pulse_glauber_comparison(pulse: PulseSpectrum, position: float = 0.0, dz: float | None = None,
                             t: float = 0.0, n_samples: int = 65) -> PulseGlauberReport:
    """Glauber density versus ``Re n^(1/2)`` for a normally incident pulse, by direct mode sums.

    Both densities share the transverse polarization and normalization, so
    the ratio reduces to ``|Psi^(1/2)|^2 / omega_bar`` against
    ``Re(Psi^(1/2)* Psi^(-1/2))`` integrated over the slab ``position +- dz/2``.
    """
    wbar, dw = pulse.moments()
    bw = dw / wbar
    _warn_bandwidth(bw)
    if dz is None:
        dz = 0.5 * pulse.constants.c / wbar
    z = np.linspace(position - dz / 2, position + dz / 2, n_samples)
    pp = pulse.wave_function(0.5, z, t)
    pm = pulse.wave_function(-0.5, z, t)
    ratio = math.fsum(np.abs(pp) ** 2 / wbar) / math.fsum((pp.conj() * pm).real)
    return PulseGlauberReport(wbar, bw, ratio, abs(ratio - 1))


def l1_distance(a: np.ndarray, b: np.ndarray) -> float:
    """``||a - b||_1 / ||b||_1``."""
    return grid_sum(np.abs(a - b)) / grid_sum(np.abs(b))


__all__ = [
    "DensityReport", "GlauberReport", "VectorResult", "angular_momentum_functional",
    "continuity_residual", "cycle_averaged_angular_momentum", "density", "detector_mask",
    "glauber_comparison", "gaussian_pulse", "l1_distance", "pulse_glauber_comparison", "PulseSpectrum", "mode_sum_momentum", "momentum_functional",
    "rspace_norm", "spectral_moments", "state_density", "state_fields", "two_photon_marginal",
]
