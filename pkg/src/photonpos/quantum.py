"""Photon states up to two photons and their real-space wave functions.

Modes are labelled by a flat index ``p = s * N + i`` where ``s`` is the
helicity slot (0 for sigma=+1, 1 for sigma=-1), ``N`` the number of k-points
and ``i`` the flattened k index. Two-photon amplitudes follow the convention

    |Psi_2> = 1/2! sum_{p,q} sqrt(1 + delta_pq) c_pq a_p^+ a_q^+ |0>

with ``c`` symmetric, so ``||Psi_2||^2 = sum_{p<=q} |c_pq|^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .kspace import KGrid, PhysicalConstants, fourier_to_rspace, grid_sum
from .polarization import SIGMAS, PolarizationBasis, sigma_index
from .posop import check_alpha


@dataclass(frozen=True, eq=False)
class PhotonState:
    """Mode-coefficient state truncated at two photons.

    ``c1`` has shape ``(2, n, n, n)``; ``c2_pairs`` holds ``(p, q)`` with
    ``p <= q`` and ``c2_values`` the matching amplitudes.
    """

    grid: KGrid
    c0: complex = 0.0
    c1: np.ndarray | None = None
    c2_pairs: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))
    c2_values: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))

    def __post_init__(self):
        shape = (2,) + self.grid.shape
        c1 = np.zeros(shape, dtype=complex) if self.c1 is None else np.asarray(self.c1, dtype=complex)
        if c1.shape != shape:
            raise ValueError(f"c1 must have shape {shape}, got {c1.shape}")
        pairs = np.asarray(self.c2_pairs, dtype=np.int64).reshape(-1, 2)
        vals = np.asarray(self.c2_values, dtype=complex).ravel()
        if len(pairs) != len(vals):
            raise ValueError("c2_pairs and c2_values differ in length")
        if len(pairs):
            if pairs.min() < 0 or pairs.max() >= self.n_modes:
                raise ValueError("two-photon mode index out of range")
            pairs = np.sort(pairs, axis=1)
            if len(np.unique(pairs, axis=0)) != len(pairs):
                raise ValueError("duplicate two-photon pair")
        for name, arr in (("c1", c1), ("c2_pairs", pairs), ("c2_values", vals)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_modes(self) -> int:
        return 2 * self.grid.size

    @property
    def norm_squared(self) -> float:
        return (abs(self.c0) ** 2 + grid_sum(np.abs(self.c1) ** 2)
                + grid_sum(np.abs(self.c2_values) ** 2))

    @property
    def photon_number(self) -> float:
        return grid_sum(np.abs(self.c1) ** 2) + 2 * grid_sum(np.abs(self.c2_values) ** 2)

    def normalized(self) -> "PhotonState":
        s = math.sqrt(self.norm_squared)
        if s == 0:
            raise ValueError("cannot normalize the zero state")
        return replace(self, c0=self.c0 / s, c1=self.c1 / s, c2_values=self.c2_values / s)

    def c2(self, p: int, q: int) -> complex:
        p, q = min(p, q), max(p, q)
        hit = np.nonzero((self.c2_pairs[:, 0] == p) & (self.c2_pairs[:, 1] == q))[0]
        return complex(self.c2_values[hit[0]]) if len(hit) else 0j

    def spectral_moments(self) -> tuple[float, float]:
        """Mean and rms one-photon frequency weighted by ``|c1|^2``."""
        w = np.sum(np.abs(self.c1) ** 2, axis=0)
        tot = grid_sum(w)
        om = self.grid.omega
        mean = grid_sum(w * om) / tot
        return mean, math.sqrt(max(grid_sum(w * (om - mean) ** 2) / tot, 0.0))

    def mode_omega(self) -> np.ndarray:
        """Frequency of every flat mode index."""
        w = self.grid.omega.ravel()
        return np.concatenate([w, w])


def mode_index(grid: KGrid, k_index, sigma: int) -> int:
    i = int(np.ravel_multi_index(tuple(int(v) for v in k_index), grid.shape))
    return sigma_index(sigma) * grid.size + i


def split_mode(grid: KGrid, p: int) -> tuple[int, int]:
    """``(sigma, flat k index)`` of a mode."""
    s, i = divmod(int(p), grid.size)
    return SIGMAS[s], i


# -- generators ---------------------------------------------------------------

def single_mode(grid: KGrid, k_index, sigma: int) -> PhotonState:
    c1 = np.zeros((2,) + grid.shape, dtype=complex)
    c1[(sigma_index(sigma),) + tuple(k_index)] = 1.0
    return PhotonState(grid, c1=c1)


def from_coefficients(grid: KGrid, coeffs: np.ndarray, sigma: int | None = None,
                      normalize: bool = True) -> PhotonState:
    """One-photon state from a ``(2, n, n, n)`` array, or ``(n, n, n)`` plus ``sigma``."""
    coeffs = np.asarray(coeffs, dtype=complex)
    if sigma is not None:
        c1 = np.zeros((2,) + grid.shape, dtype=complex)
        c1[sigma_index(sigma)] = coeffs
    else:
        c1 = coeffs
    st = PhotonState(grid, c1=c1)
    return st.normalized() if normalize else st


def localized(grid: KGrid, r0=(0.0, 0.0, 0.0), sigma: int = 1, omega_power: float = 0.0,
              envelope=None) -> PhotonState:
    """Coefficients ``omega^p exp(-i k.r0) g(k)``: a photon localized at ``r0``.

    ``envelope`` is an optional callable of the grid returning ``g``.
    """
    c = grid.omega**omega_power * np.exp(-1j * (grid.k @ np.asarray(r0, dtype=float)))
    if envelope is not None:
        c = c * envelope(grid)
    return from_coefficients(grid, c, sigma)


def gaussian_coefficients(grid: KGrid, k_center, width: float, r0=(0.0, 0.0, 0.0)) -> np.ndarray:
    """``exp(-|k - k_c|^2 / (4 width^2)) exp(-i k.r0)``; ``|c|^2`` has rms ``width`` per axis."""
    kc = np.asarray(k_center, dtype=float)
    d2 = np.sum((grid.k - kc) ** 2, axis=-1)
    return np.exp(-d2 / (4 * width**2) - 1j * (grid.k @ np.asarray(r0, dtype=float)))


def gaussian_packet(grid: KGrid, k_center, width: float, sigma: int = 1,
                    r0=(0.0, 0.0, 0.0)) -> PhotonState:
    return from_coefficients(grid, gaussian_coefficients(grid, k_center, width, r0), sigma)


def axial_pulse(grid: KGrid, kz_center: float, width: float, sigma: int = 1,
                z0: float = 0.0) -> PhotonState:
    """Pulse along z: Gaussian ``k_z`` spectrum on the k column nearest the z-axis."""
    h = grid.n_per_axis // 2
    kz = grid.k_axis
    c = np.zeros(grid.shape, dtype=complex)
    c[h, h, :] = np.exp(-(kz - kz_center) ** 2 / (4 * width**2) - 1j * kz * z0)
    return from_coefficients(grid, c, sigma)


def axial_pulse_with_bandwidth(grid: KGrid, bandwidth: float, kz_center: float | None = None,
                               sigma: int = 1, z0: float = 0.0) -> PhotonState:
    """:func:`axial_pulse` whose measured ``delta_omega / omega_bar`` equals ``bandwidth``.

    ``kz_center`` defaults to the grid value half way to ``k_max``.
    """
    if kz_center is None:
        kz_center = grid.k_axis[(3 * grid.n_per_axis) // 4]

    def excess(logw):
        wbar, dw = axial_pulse(grid, kz_center, math.exp(logw), sigma, z0).spectral_moments()
        return dw / wbar - bandwidth

    lo, hi = math.log(1e-3 * grid.dk), math.log(grid.n_per_axis * grid.dk)
    if excess(lo) > 0 or excess(hi) < 0:
        raise ValueError(f"bandwidth {bandwidth} is not reachable on this grid")
    w = math.exp(brentq(excess, lo, hi, xtol=1e-14, rtol=1e-12))
    return axial_pulse(grid, kz_center, w, sigma, z0)


def two_photon_product(grid: KGrid, g1: np.ndarray, g2: np.ndarray, rel_cutoff: float = 1e-10,
                       normalize: bool = True) -> PhotonState:
    """State ``a^+(g1) a^+(g2) |0>`` from two ``(2, n, n, n)`` mode functions.

    Modes where both functions are below ``rel_cutoff`` of their maxima are
    dropped to keep the pair list sparse.
    """
    f1 = np.asarray(g1, dtype=complex).ravel()
    f2 = np.asarray(g2, dtype=complex).ravel()
    keep = np.nonzero((np.abs(f1) > rel_cutoff * np.abs(f1).max())
                      | (np.abs(f2) > rel_cutoff * np.abs(f2).max()))[0]
    p, q = np.triu_indices(len(keep))
    P, Q = keep[p], keep[q]
    vals = f1[P] * f2[Q] + f2[P] * f1[Q]
    vals = np.where(P == Q, vals / math.sqrt(2), vals)
    nz = vals != 0
    st = PhotonState(grid, c2_pairs=np.stack([P[nz], Q[nz]], axis=1), c2_values=vals[nz])
    return st.normalized() if normalize else st


def two_mode_pair(grid: KGrid, mode_a, mode_b) -> PhotonState:
    """``a_p^+ a_q^+ |0>`` (normalized) for modes given as ``(k_index, sigma)``."""
    p = mode_index(grid, *mode_a)
    q = mode_index(grid, *mode_b)
    return PhotonState(grid, c2_pairs=[[p, q]], c2_values=[1.0])


# -- dynamics -----------------------------------------------------------------

def evolve(state: PhotonState, dt: float) -> PhotonState:
    """Free evolution: every photon picks up ``exp(-i omega dt)``."""
    ph = np.exp(-1j * state.grid.omega * dt)
    c1 = state.c1 * ph[None]
    w = state.mode_omega()
    p, q = state.c2_pairs[:, 0], state.c2_pairs[:, 1]
    c2 = state.c2_values * np.exp(-1j * (w[p] + w[q]) * dt)
    return replace(state, c1=c1, c2_values=c2)


# -- wave functions ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WaveField:
    """Real-space wave function represented by its k-space expansion.

    ``coeffs`` are the amplitudes multiplying ``exp(i k.r) / sqrt(V)``; the
    real-space samples are produced on demand on the conjugate grid.
    """

    grid: KGrid
    coeffs: np.ndarray
    alpha: float
    sigma: int
    t: float = 0.0

    @cached_property
    def values(self) -> np.ndarray:
        return fourier_to_rspace(self.coeffs, self.grid)

    def curl(self) -> np.ndarray:
        return np.cross(1j * self.grid.k, self.coeffs)

    def divergence(self) -> np.ndarray:
        return np.sum(1j * self.grid.k * self.coeffs, axis=-1)

    def time_derivative(self) -> np.ndarray:
        return -1j * self.grid.omega[..., None] * self.coeffs

    def gradient(self, axis: int) -> np.ndarray:
        return 1j * self.grid.k[..., axis][..., None] * self.coeffs

    def with_coeffs(self, coeffs, **kw) -> "WaveField":
        return replace(self, coeffs=coeffs, **kw)


def rspace_norm(coeffs: np.ndarray, grid: KGrid) -> float:
    """``sqrt(sum_r |F(r)|^2 dV)`` evaluated on the real-space grid."""
    vals = fourier_to_rspace(coeffs, grid)
    return math.sqrt(grid_sum(np.abs(vals) ** 2) * grid.dV)


def _check_basis(state: PhotonState, basis: PolarizationBasis):
    if not state.grid.same_as(basis.grid):
        raise ValueError("state and basis live on different grids")


def synthesize_one_photon(state: PhotonState, basis: PolarizationBasis, alpha: float,
                          sigma: int, t: float = 0.0) -> WaveField:
    """``sum_k c_k e_k omega^alpha exp(i k.r - i omega t) / sqrt(V)``."""
    _check_basis(state, basis)
    alpha = check_alpha(alpha)
    g = state.grid
    c = state.c1[sigma_index(sigma)] * np.exp(-1j * g.omega * t) * g.omega**alpha
    return WaveField(g, c[..., None] * basis[sigma], alpha, sigma, t)


def wave_equation_residual(state: PhotonState, basis: PolarizationBasis, alpha: float,
                           sigma: int, t: float = 0.0) -> float:
    """Norm of ``i dPsi/dt - sigma c curl Psi`` over real space."""
    psi = synthesize_one_photon(state, basis, alpha, sigma, t)
    c = state.grid.constants.c
    diff = 1j * psi.time_derivative() - sigma * c * psi.curl()
    return rspace_norm(diff, state.grid)


def field_potential_residual(state: PhotonState, basis: PolarizationBasis, sigma: int,
                             t: float = 0.0) -> float:
    """Norm of ``i dPsi^(-1/2)/dt - Psi^(1/2)``."""
    pm = synthesize_one_photon(state, basis, -0.5, sigma, t)
    pp = synthesize_one_photon(state, basis, 0.5, sigma, t)
    return rspace_norm(1j * pm.time_derivative() - pp.coeffs, state.grid)


def glauber_constant(grid: KGrid) -> float:
    """``sqrt(hbar / (2 eps0 V))``, the field-operator prefactor."""
    k = grid.constants
    return math.sqrt(k.hbar / (2 * k.eps0 * grid.volume))


def glauber_wave_function(state: PhotonState, basis: PolarizationBasis, sigma: int,
                          t: float = 0.0) -> WaveField:
    """``<0|E^(+)|Psi>`` using the stored constant; proportional to ``Psi^(1/2)``."""
    psi = synthesize_one_photon(state, basis, 0.5, sigma, t)
    return psi.with_coeffs(glauber_constant(state.grid) * psi.coeffs)


@dataclass(frozen=True, eq=False)
class FieldSet:
    """Positive-frequency fields of one helicity component (k-space coefficients)."""

    grid: KGrid
    sigma: int
    A: np.ndarray
    D: np.ndarray
    B: np.ndarray
    E: np.ndarray
    H: np.ndarray
    F: np.ndarray
    constants: PhysicalConstants

    def rspace(self, name: str) -> np.ndarray:
        return fourier_to_rspace(getattr(self, name), self.grid)


def field_identifications(psi_minus: WaveField, psi_plus: WaveField,
                          constants: PhysicalConstants | None = None) -> FieldSet:
    """Vector potential, displacement, induction and RS vector from the alpha = -+1/2 pair."""
    if psi_minus.alpha != -0.5 or psi_plus.alpha != 0.5:
        raise ValueError("expected alpha=-1/2 and alpha=+1/2 wave functions")
    if psi_minus.sigma != psi_plus.sigma or not psi_minus.grid.same_as(psi_plus.grid):
        raise ValueError("wave functions differ in helicity or grid")
    k = constants or psi_minus.grid.constants
    sigma = psi_minus.sigma
    A = math.sqrt(k.hbar / (2 * k.eps0)) * psi_minus.coeffs
    D = 1j * math.sqrt(k.hbar * k.eps0 / 2) * psi_plus.coeffs
    B = np.cross(1j * psi_minus.grid.k, A)
    E = D / k.eps0
    H = B / k.mu0
    F = D / math.sqrt(2 * k.eps0) + 1j * sigma * B / math.sqrt(2 * k.mu0)
    return FieldSet(psi_minus.grid, sigma, A, D, B, E, H, F, k)


def fields_from_state(state: PhotonState, basis: PolarizationBasis, sigma: int,
                      t: float = 0.0) -> FieldSet:
    return field_identifications(synthesize_one_photon(state, basis, -0.5, sigma, t),
                                 synthesize_one_photon(state, basis, 0.5, sigma, t),
                                 state.grid.constants)


def maxwell_residuals(f: FieldSet) -> dict[str, float]:
    """Vacuum Maxwell residual norms (k-space exact, reported as real-space norms)."""
    g = f.grid
    ik = 1j * g.k
    dt = -1j * g.omega[..., None]

    def scalar_norm(x):
        return rspace_norm(x[..., None], g)

    return {
        "div_D": scalar_norm(np.sum(ik * f.D, axis=-1)),
        "div_B": scalar_norm(np.sum(ik * f.B, axis=-1)),
        "faraday": rspace_norm(np.cross(ik, f.E) + dt * f.B, g),
        "ampere": rspace_norm(np.cross(ik, f.H) - dt * f.D, g),
    }


# -- two photons ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TwoPhotonWaveField:
    """``Psi_{sigma sigma'; j j'}(r, r')`` on a coarsened product grid.

    ``blocks[(sigma, sigma')]`` has shape ``(M, 3, M, 3)`` where ``M`` is the
    number of coarse real-space points listed in ``r_points``.
    """

    grid: KGrid
    alpha: float
    t: float
    coarsening: int
    r_points: np.ndarray
    blocks: dict

    @property
    def cell_volume(self) -> float:
        return self.grid.dV * self.coarsening**3


class ProductGridTooLarge(MemoryError):
    pass


def coarse_r_points(grid: KGrid, coarsening: int) -> np.ndarray:
    axis = grid.r_axis[::coarsening]
    x, y, z = np.meshgrid(axis, axis, axis, indexing="ij")
    return np.stack([x, y, z], axis=-1).reshape(-1, 3)


def synthesize_two_photon(state: PhotonState, basis: PolarizationBasis, alpha: float,
                          t: float = 0.0, coarsening: int = 4, sigmas=None,
                          max_bytes: float = 5e8) -> TwoPhotonWaveField:
    """Project the two-photon sector onto pairs of position eigenvectors at equal time.

    Only modes that appear in ``c2`` enter the sums, so cost scales with the
    support of the state rather than the full grid.
    """
    _check_basis(state, basis)
    alpha = check_alpha(alpha)
    if coarsening < 1 or int(coarsening) != coarsening:
        raise ValueError("coarsening must be a positive integer")
    g = state.grid
    rpts = coarse_r_points(g, int(coarsening))
    M = len(rpts)
    pairs = [(1, 1), (1, -1), (-1, 1), (-1, -1)] if sigmas is None else [tuple(sigmas)]
    need = len(pairs) * (M * 3) ** 2 * 16
    if need > max_bytes:
        raise ProductGridTooLarge(f"product grid needs {need / 1e6:.0f} MB (> {max_bytes / 1e6:.0f} MB); "
                                  "increase coarsening")
    modes = np.unique(state.c2_pairs)
    a = np.searchsorted(modes, state.c2_pairs[:, 0])
    b = np.searchsorted(modes, state.c2_pairs[:, 1])
    v = np.where(a == b, math.sqrt(2), 1.0) * state.c2_values
    C = np.zeros((len(modes), len(modes)), dtype=complex)
    C[a, b] = v
    C[b, a] = v
    sidx, kidx = np.divmod(modes, g.size)
    sig = np.where(sidx == 0, SIGMAS[0], SIGMAS[1])
    kv = g.k.reshape(-1, 3)[kidx]
    w = g.omega.ravel()[kidx]
    evec = basis.vectors.reshape(2, -1, 3)[sidx, kidx]
    amp = w**alpha * np.exp(-1j * w * t) / math.sqrt(g.volume)
    phase = np.exp(1j * rpts @ kv.T)  # (M, modes)
    G = phase[:, None, :] * (evec.T * amp)[None, :, :]  # (M, 3, modes)
    blocks = {}
    for s1, s2 in pairs:
        m1 = sig == s1
        m2 = sig == s2
        G1 = G[:, :, m1].reshape(M * 3, -1)
        G2 = G[:, :, m2].reshape(M * 3, -1)
        blocks[(s1, s2)] = (G1 @ C[np.ix_(m1, m2)] @ G2.T).reshape(M, 3, M, 3)
    return TwoPhotonWaveField(g, alpha, t, int(coarsening), rpts, blocks)


def exchange_asymmetry(two: TwoPhotonWaveField) -> float:
    """``max |Psi_{s s'; j j'}(r, r') - Psi_{s' s; j' j}(r', r)|``."""
    worst = 0.0
    for (s1, s2), blk in two.blocks.items():
        other = two.blocks.get((s2, s1))
        if other is None:
            continue
        worst = max(worst, float(np.abs(blk - other.transpose(2, 3, 0, 1)).max()))
    return worst


# -- configuration --------------------------------------------------------------

def state_from_config(grid: KGrid, cfg: dict) -> PhotonState:
    """Build a state from the JSON ``state`` block.

    Either ``{"coefficients": [{"k_index": [i, j, l], "sigma": 1, "re": .., "im": ..}, ...]}``
    or ``{"generator": name, ...parameters}`` with ``name`` one of
    ``localized``, ``gaussian_packet``, ``single_mode``, ``two_mode_pair`` or
    ``packet_pair`` (two photons in the Gaussian packets listed under ``packets``).
    """
    cfg = dict(cfg)
    if "coefficients" in cfg:
        c1 = np.zeros((2,) + grid.shape, dtype=complex)
        for entry in cfg["coefficients"]:
            extra = set(entry) - {"k_index", "sigma", "re", "im"}
            if extra:
                raise ValueError(f"unknown coefficient keys {sorted(extra)}")
            idx = (sigma_index(int(entry["sigma"])),) + tuple(int(v) for v in entry["k_index"])
            c1[idx] += complex(float(entry.get("re", 0.0)), float(entry.get("im", 0.0)))
        return PhotonState(grid, c1=c1).normalized()
    gen = cfg.pop("generator", None)
    sigma = int(cfg.pop("sigma", 1))
    if gen == "localized":
        env = None
        if "envelope_k0" in cfg:
            k0 = float(cfg.pop("envelope_k0"))
            env = lambda g: np.exp(-(g.kmag / k0) ** 2)  # noqa: E731
        st = localized(grid, cfg.pop("r0", (0, 0, 0)), sigma, float(cfg.pop("omega_power", 0.0)), env)
    elif gen == "gaussian_packet":
        st = gaussian_packet(grid, cfg.pop("k_center"), float(cfg.pop("width")), sigma,
                             cfg.pop("r0", (0, 0, 0)))
    elif gen == "single_mode":
        st = single_mode(grid, cfg.pop("k_index"), sigma)
    elif gen == "two_mode_pair":
        a = cfg.pop("mode_a")
        b = cfg.pop("mode_b")
        st = two_mode_pair(grid, (a["k_index"], int(a["sigma"])), (b["k_index"], int(b["sigma"])))
    elif gen == "packet_pair":
        funcs = []
        for pk in cfg.pop("packets"):
            pk = dict(pk)
            f = np.zeros((2,) + grid.shape, dtype=complex)
            f[sigma_index(int(pk.pop("sigma", 1)))] = gaussian_coefficients(
                grid, pk.pop("k_center"), float(pk.pop("width")), pk.pop("r0", (0, 0, 0)))
            if pk:
                raise ValueError(f"unknown packet parameters {sorted(pk)}")
            funcs.append(f)
        if len(funcs) != 2:
            raise ValueError("packet_pair needs exactly two packets")
        st = two_photon_product(grid, funcs[0], funcs[1], float(cfg.pop("rel_cutoff", 1e-6)))
    else:
        raise ValueError(f"unknown state generator {gen!r}")
    if cfg:
        raise ValueError(f"unknown state parameters {sorted(cfg)}")
    return st
