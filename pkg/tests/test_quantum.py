import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fock_oracle import fock_amplitude
from photonpos.kspace import build_grid, grid_sum
from photonpos.polarization import make_basis
from photonpos.quantum import (
    PhotonState, ProductGridTooLarge, evolve, exchange_asymmetry, field_identifications,
    field_potential_residual, fields_from_state, gaussian_coefficients, glauber_constant,
    localized, maxwell_residuals, mode_index, rspace_norm, single_mode, state_from_config,
    synthesize_one_photon, synthesize_two_photon, two_mode_pair, two_photon_product,
    wave_equation_residual,
)


@pytest.fixture(scope="module")
def setup():
    g = build_grid(8, 2 * math.pi)
    return g, make_basis(g)


def random_state(g, seed):
    rng = np.random.default_rng(seed)
    c1 = rng.normal(size=(2,) + g.shape) + 1j * rng.normal(size=(2,) + g.shape)
    return PhotonState(g, c1=c1).normalized()


def test_single_mode_is_plane_wave(setup):
    g, b = setup
    idx = (2, 5, 6)
    for a in (-0.5, 0.0, 0.5):
        psi = synthesize_one_photon(single_mode(g, idx, -1), b, a, -1).values
        expect = (np.exp(1j * g.r_points() @ g.k[idx])[..., None] * b[-1][idx]
                  * g.omega[idx] ** a / math.sqrt(g.volume))
        np.testing.assert_allclose(psi, expect, atol=1e-13)


def test_lp_norm_parseval(setup):
    g, b = setup
    st_ = random_state(g, 1)
    tot = sum(grid_sum(np.abs(synthesize_one_photon(st_, b, 0.0, s).values) ** 2) for s in (1, -1))
    assert tot * g.dV == pytest.approx(1.0, abs=1e-12)


def test_localized_state_peaks_at_r0(setup):
    g, b = setup
    r0 = g.r_points()[2, 5, 4]
    psi = synthesize_one_photon(localized(g, r0, 1), b, 0.0, 1).values
    peak = np.unravel_index(np.argmax(np.linalg.norm(psi, axis=-1)), g.shape)
    assert peak == (2, 5, 4)


def test_grid_mismatch(setup):
    g, b = setup
    with pytest.raises(ValueError):
        synthesize_one_photon(random_state(build_grid(6, 2.0), 0), b, 0.0, 1)


def test_state_validation(setup):
    g, _ = setup
    with pytest.raises(ValueError):
        PhotonState(g, c1=np.zeros((2, 3, 3, 3)))
    with pytest.raises(ValueError):
        PhotonState(g, c2_pairs=[[0, 1], [1, 0]], c2_values=[1, 1])
    with pytest.raises(ValueError):
        PhotonState(g).normalized()


def test_evolve_group_law(setup):
    g, _ = setup
    s = two_photon_product(g, random_state(g, 2).c1, random_state(g, 3).c1)
    s = PhotonState(g, c0=0.3, c1=random_state(g, 4).c1 * 0.5, c2_pairs=s.c2_pairs,
                    c2_values=s.c2_values * 0.5).normalized()
    assert evolve(s, 0.0).c1.tobytes() == s.c1.tobytes()
    assert abs(evolve(s, 1.7).norm_squared - s.norm_squared) < 1e-14
    a = evolve(evolve(s, 0.4), 1.1)
    c = evolve(s, 1.5)
    assert np.abs(a.c1 - c.c1).max() < 1e-13
    assert np.abs(a.c2_values - c.c2_values).max() < 1e-13
    assert a.c0 == s.c0


def test_evolve_matches_synthesis_time(setup):
    # only positive-frequency phases appear: evolving the state equals synthesizing at t
    g, b = setup
    s = random_state(g, 5)
    a = synthesize_one_photon(evolve(s, 0.8), b, 0.5, 1, 0.0).coeffs
    c = synthesize_one_photon(s, b, 0.5, 1, 0.8).coeffs
    np.testing.assert_allclose(a, c, atol=1e-15)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([-0.5, 0.0, 0.5]), st.sampled_from([1, -1]),
       st.floats(-3, 3))
def test_wave_equation_residual(seed, alpha, sigma, t):
    g = build_grid(6, 5.0)
    assert wave_equation_residual(random_state(g, seed), make_basis(g), alpha, sigma, t) < 1e-10


def test_field_potential_link(setup):
    g, b = setup
    s = random_state(g, 6)
    for sigma in (1, -1):
        assert field_potential_residual(s, b, sigma, 0.3) < 1e-10


@pytest.mark.parametrize("units", ["natural", "si"])
def test_field_identities_and_maxwell(units):
    from photonpos.kspace import PhysicalConstants
    k = PhysicalConstants.from_units(units)
    g = build_grid(6, 4.0 if units == "natural" else 4e-6, k)
    b = make_basis(g)
    s = random_state(g, 7)
    for sigma in (1, -1):
        f = fields_from_state(s, b, sigma, 0.0)
        scale = rspace_norm(f.D / math.sqrt(k.eps0), g)
        assert rspace_norm(f.D / math.sqrt(k.eps0) - 1j * sigma * f.B / math.sqrt(k.mu0), g) < 1e-10 * scale
        assert rspace_norm(f.F - math.sqrt(2) * f.D / math.sqrt(k.eps0), g) < 1e-10 * scale
        # each residual is compared with the size of the terms it balances
        ref = {"div_D": rspace_norm(f.D, g) * g.k_max, "div_B": rspace_norm(f.B, g) * g.k_max,
               "faraday": rspace_norm(f.E, g) * g.k_max, "ampere": rspace_norm(f.H, g) * g.k_max}
        for name, val in maxwell_residuals(f).items():
            assert val < 1e-10 * ref[name], name


def test_field_identification_label_check(setup):
    g, b = setup
    s = random_state(g, 0)
    p0 = synthesize_one_photon(s, b, 0.0, 1)
    pp = synthesize_one_photon(s, b, 0.5, 1)
    with pytest.raises(ValueError):
        field_identifications(p0, pp)


def test_glauber_constant(setup):
    g, _ = setup
    assert glauber_constant(g) == pytest.approx(math.sqrt(1 / (2 * g.volume)))


# -- two photons --------------------------------------------------------------

def test_two_photon_matches_fock_oracle():
    g = build_grid(4, 3.0)
    b = make_basis(g)
    p = [mode_index(g, (0, 1, 2), 1), mode_index(g, (3, 1, 0), -1), mode_index(g, (2, 2, 1), 1)]
    rng = np.random.default_rng(0)
    pairs, vals = [], []
    for i in range(3):
        for j in range(i, 3):
            pairs.append([p[i], p[j]])
            vals.append(complex(rng.normal(), rng.normal()))
    st_ = PhotonState(g, c2_pairs=pairs, c2_values=vals).normalized()
    C = np.zeros((3, 3), dtype=complex)
    for (a, c), v in zip(st_.c2_pairs, st_.c2_values):
        ia, ic = p.index(a), p.index(c)
        C[ia, ic] = C[ic, ia] = v
    modes = [(1 if q < g.size else -1, q % g.size) for q in p]
    for alpha in (0.0, 0.5):
        two = synthesize_two_photon(st_, b, alpha, coarsening=1)
        for (i, j) in [(0, 5), (17, 17), (40, 3)]:
            for s1, s2 in [(1, 1), (1, -1), (-1, 1)]:
                ref, nrm = fock_amplitude(g, b, modes, C, alpha, two.r_points[i], two.r_points[j], s1, s2)
                assert np.abs(two.blocks[(s1, s2)][i, :, j, :] - ref).max() < 1e-12
        assert nrm == pytest.approx(st_.norm_squared, abs=1e-12)


def test_doubly_occupied_mode_carries_sqrt2():
    g = build_grid(4, 3.0)
    b = make_basis(g)
    st_ = two_mode_pair(g, ((1, 1, 1), 1), ((1, 1, 1), 1))
    assert st_.norm_squared == 1.0 and st_.photon_number == 2.0
    two = synthesize_two_photon(st_, b, 0.0, coarsening=1)
    idx = (1, 1, 1)
    r, rp = two.r_points[3], two.r_points[9]
    f = lambda x: b[1][idx] * np.exp(1j * g.k[idx] @ x) / math.sqrt(g.volume)  # noqa: E731
    np.testing.assert_allclose(two.blocks[(1, 1)][3, :, 9, :], math.sqrt(2) * np.outer(f(r), f(rp)), atol=1e-14)


def test_distinct_modes_give_symmetric_sum():
    g = build_grid(4, 3.0)
    b = make_basis(g)
    k1, k2 = (0, 1, 2), (3, 2, 1)
    two = synthesize_two_photon(two_mode_pair(g, (k1, 1), (k2, 1)), b, 0.0, coarsening=1)
    f = lambda k, x: b[1][k] * np.exp(1j * g.k[k] @ x) / math.sqrt(g.volume)  # noqa: E731
    r, rp = two.r_points[7], two.r_points[30]
    ref = np.outer(f(k1, r), f(k2, rp)) + np.outer(f(k2, r), f(k1, rp))
    np.testing.assert_allclose(two.blocks[(1, 1)][7, :, 30, :], ref, atol=1e-14)


def test_exchange_symmetry(setup):
    g, b = setup
    c1 = random_state(g, 8).c1
    c2 = random_state(g, 9).c1
    st_ = two_photon_product(g, c1, c2)
    for alpha in (-0.5, 0.0, 0.5):
        assert exchange_asymmetry(synthesize_two_photon(st_, b, alpha, coarsening=2)) < 1e-12


def test_product_state_norm(setup):
    g, _ = setup
    c1 = np.zeros((2,) + g.shape, dtype=complex)
    c1[0] = gaussian_coefficients(g, (0, 0, 1.5), 0.4, (-1, 0, 0))
    c2 = np.zeros_like(c1)
    c2[1] = gaussian_coefficients(g, (0, 0, 1.5), 0.4, (1, 0, 0))
    st_ = two_photon_product(g, c1, c2)
    assert st_.norm_squared == pytest.approx(1.0, abs=1e-12)
    assert st_.photon_number == pytest.approx(2.0, abs=1e-12)


def test_memory_guard(setup):
    g, b = setup
    st_ = two_mode_pair(g, ((0, 0, 0), 1), ((1, 1, 1), 1))
    with pytest.raises(ProductGridTooLarge):
        synthesize_two_photon(st_, b, 0.0, coarsening=1, max_bytes=1e6)
    with pytest.raises(ValueError):
        synthesize_two_photon(st_, b, 0.0, coarsening=0)


def test_state_from_config(setup):
    g, _ = setup
    s = state_from_config(g, {"coefficients": [{"k_index": [1, 2, 3], "sigma": -1, "re": 3, "im": 4}]})
    assert s.c1[1, 1, 2, 3] == pytest.approx(0.6 + 0.8j)
    s = state_from_config(g, {"generator": "gaussian_packet", "k_center": [0, 0, 2], "width": 0.3})
    assert s.norm_squared == pytest.approx(1.0)
    s = state_from_config(g, {"generator": "two_mode_pair", "mode_a": {"k_index": [0, 0, 0], "sigma": 1},
                              "mode_b": {"k_index": [1, 0, 0], "sigma": -1}})
    assert s.photon_number == 2.0
    assert state_from_config(g, {"generator": "localized", "envelope_k0": 2.0}).norm_squared == pytest.approx(1)
    with pytest.raises(ValueError):
        state_from_config(g, {"generator": "single_mode", "k_index": [0, 0, 0], "bogus": 1})
    with pytest.raises(ValueError):
        state_from_config(g, {"generator": "nope"})
