import math

import numpy as np
import pytest

from photonpos.kspace import build_grid, grid_sum
from photonpos.polarization import make_basis
from photonpos.posop import (
    ALPHAS, adjoint_check, analysis_mask, apply_factored_operator, apply_position_operator,
    check_alpha, commutator_check, compact_transverse_field, convergence_order,
    eigenvector_residual, field_theory_inner_product, inner_product, masked_norm,
    position_eigenstate, random_transverse_field, refinement_pair, similarity_map,
    transverse_part,
)


@pytest.fixture(scope="module")
def pair():
    return refinement_pair(12, 4 * math.pi)


def test_alpha_label():
    for a in ALPHAS:
        assert check_alpha(a) == a
    with pytest.raises(ValueError):
        check_alpha(0.25)


def test_eigenstate_magnitude_and_transversality():
    g = build_grid(6, 3.0)
    b = make_basis(g)
    for a in ALPHAS:
        psi = position_eigenstate(g, b, (0.2, 0.1, -0.3), 1, a)
        mag = np.linalg.norm(psi, axis=-1)
        np.testing.assert_allclose(mag, g.omega**a / math.sqrt(g.volume), rtol=1e-12)
        assert np.abs(np.sum(g.khat * psi, axis=-1)).max() < 1e-14


@pytest.mark.parametrize("alpha", ALPHAS)
@pytest.mark.parametrize("sigma", [1, -1])
def test_eigenvector_equation_converges(pair, alpha, sigma):
    r = np.array([0.3, -0.4, 0.2])
    res = []
    for g in pair:
        psi = position_eigenstate(g, make_basis(g), r, sigma, alpha)
        res.append(np.linalg.norm(eigenvector_residual(psi, g, r, alpha)))
    assert convergence_order(*res) >= 1.9


def test_eigenvector_residual_r_along_x():
    g16, g32 = refinement_pair(16, 2 * math.pi * 4)
    r = (1.0, 0.0, 0.0)
    res = [eigenvector_residual(position_eigenstate(g, make_basis(g), r, 1), g, r, 0.0)
           for g in (g16, g32)]
    assert np.linalg.norm(res[0]) / np.linalg.norm(res[1]) >= 3.6


def test_helicity_symmetric_residuals():
    g = build_grid(12, 4 * math.pi)
    b = make_basis(g)
    r = (0.1, 0.5, -0.2)
    rp = eigenvector_residual(position_eigenstate(g, b, r, 1), g, r, 0.5)
    rm = eigenvector_residual(position_eigenstate(g, b, r, -1), g, r, 0.5)
    np.testing.assert_allclose(rp, rm, rtol=0.1)


def test_zero_eigenvalue_state_converges(pair):
    res = [np.linalg.norm(eigenvector_residual(position_eigenstate(g, make_basis(g), (0, 0, 0), 1), g,
                                                (0, 0, 0), 0.0)) for g in pair]
    assert convergence_order(*res) >= 1.9


def test_printed_sign_of_cot_term_is_not_an_eigenoperator():
    # flipping the cot(theta) term reintroduces an O(1) residual that does not shrink
    from photonpos import posop
    g = build_grid(16, 4 * math.pi)
    psi = position_eigenstate(g, make_basis(g), (0, 0, 0), 1)
    Sk = posop.SPIN.helicity(g.khat)
    w = (g.phi_hat[..., 0] * g.cot_theta * g.inv_k)[..., None]
    flipped = apply_position_operator(psi, g, 0.0, 0) + 2 * w * np.einsum("...jl,...l->...j", Sk, psi)
    m = analysis_mask(g)
    correct = apply_position_operator(psi, g, 0.0, 0)
    assert masked_norm(flipped, m) > 10 * masked_norm(correct, m)


def test_four_term_matches_factored_form(pair):
    diffs = []
    for g in pair:
        F = random_transverse_field(g, 11)
        m = analysis_mask(g)
        for a in ALPHAS:
            d = apply_position_operator(F, g, a, "y") - apply_factored_operator(F, g, a, "y")
            diffs.append(masked_norm(d, m) / masked_norm(apply_position_operator(F, g, a, "y"), m))
    for a in range(3):
        assert convergence_order(diffs[a], diffs[a + 3]) >= 1.9


def test_analytic_alpha_term_agrees_to_second_order(pair):
    out = []
    for g in pair:
        F = random_transverse_field(g, 2)
        m = analysis_mask(g)
        d = (apply_position_operator(F, g, -0.5, "z", alpha_term="analytic")
             - apply_position_operator(F, g, -0.5, "z"))
        out.append(masked_norm(d, m) / masked_norm(F, m))
    assert convergence_order(*out) >= 1.9


def test_commutator_self_is_zero():
    g = build_grid(8, 2 * math.pi)
    assert commutator_check(0.0, random_transverse_field(g, 0), g, ("x", "x")) == 0.0


@pytest.mark.parametrize("alpha", ALPHAS)
@pytest.mark.parametrize("axes", [("x", "y"), ("y", "z"), ("x", "z")])
def test_commutator_converges(pair, alpha, axes):
    res = [commutator_check(alpha, random_transverse_field(g, 5), g, axes) for g in pair]
    assert res[0] / res[1] >= 3.6


def test_commutator_rejects_longitudinal():
    g = build_grid(8, 2 * math.pi)
    F = random_transverse_field(g, 0) + g.khat * 0.3
    with pytest.raises(ValueError):
        commutator_check(0.0, F, g, on_longitudinal="error")
    with pytest.warns(UserWarning):
        commutator_check(0.0, F, g)


def test_lp_norm_of_eigenstate():
    g = build_grid(6, 4.0)
    psi = position_eigenstate(g, make_basis(g), (0.3, 0, 0), -1)
    assert inner_product(psi, psi).real == pytest.approx(g.size / g.volume, rel=1e-12)


def test_biorthonormal_delta():
    g = build_grid(8, 8.0)
    b = make_basis(g)
    r_axis = g.r_axis
    vals = np.zeros(g.shape, dtype=complex)
    bra = position_eigenstate(g, b, (0, 0, 0), 1, 0.5)
    for idx in np.ndindex(g.shape):
        rp = (r_axis[idx[0]], r_axis[idx[1]], r_axis[idx[2]])
        vals[idx] = inner_product(bra, position_eigenstate(g, b, rp, 1, -0.5), "biorthonormal")
    centre = (g.n_per_axis // 2,) * 3
    assert np.argmax(np.abs(vals)) == np.ravel_multi_index(centre, g.shape)
    assert grid_sum(vals) * g.dV == pytest.approx(1.0, abs=1e-12)


def test_biorthonormal_equals_lp_product():
    g = build_grid(8, 5.0)
    rng = np.random.default_rng(0)
    for _ in range(20):
        F0 = transverse_part(rng.normal(size=g.shape + (3,)) + 1j * rng.normal(size=g.shape + (3,)), g)
        G0 = transverse_part(rng.normal(size=g.shape + (3,)) + 1j * rng.normal(size=g.shape + (3,)), g)
        lp = inner_product(F0, G0)
        bio = inner_product(similarity_map(F0, g, 0, 0.5), similarity_map(G0, g, 0, -0.5), "biorthonormal")
        assert abs(bio - lp) <= 1e-12 * abs(lp)


def test_inner_product_shape_mismatch():
    with pytest.raises(ValueError):
        inner_product(np.zeros((2, 2, 2, 3)), np.zeros((3, 3, 3, 3)))
    with pytest.raises(ValueError):
        inner_product(np.zeros(3), np.zeros(3), mode="other")


def test_field_theory_product_is_positive():
    g = build_grid(6, 3.0)
    F = random_transverse_field(g, 4)
    assert field_theory_inner_product(F, F, g).real > 0


def test_similarity_map_examples():
    g = build_grid(6, 3.0)
    b = make_basis(g)
    psi0 = position_eigenstate(g, b, (0.1, 0.2, 0.3), 1, 0.0)
    psi_half = position_eigenstate(g, b, (0.1, 0.2, 0.3), 1, 0.5)
    np.testing.assert_allclose(similarity_map(psi0, g, 0, 0.5), psi_half, rtol=1e-15)
    back = similarity_map(similarity_map(psi0, g, 0, -0.5), g, -0.5, 0)
    assert np.abs(back - psi0).max() < 1e-14 * np.abs(psi0).max()


@pytest.mark.parametrize("to_alpha", [0.5, -0.5])
def test_similarity_conjugation(to_alpha):
    g = build_grid(12, 4 * math.pi)
    F = random_transverse_field(g, 9)
    m = analysis_mask(g)
    for ax in range(3):
        conj = similarity_map(apply_position_operator(similarity_map(F, g, to_alpha, 0), g, 0, ax), g, 0, to_alpha)
        direct = apply_position_operator(F, g, to_alpha, ax)
        assert masked_norm(conj - direct, m) / masked_norm(direct, m) < 1e-8


def test_residual_unchanged_by_similarity():
    g = build_grid(12, 4 * math.pi)
    b = make_basis(g)
    r = (0.2, 0.2, -0.1)
    r0 = eigenvector_residual(position_eigenstate(g, b, r, 1, 0.0), g, r, 0.0)
    r_half = eigenvector_residual(similarity_map(position_eigenstate(g, b, r, 1, 0.0), g, 0, 0.5), g, r, 0.5)
    np.testing.assert_allclose(np.linalg.norm(r_half), np.linalg.norm(r0), rtol=0.1)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_adjoint_structure(pair, alpha):
    for g in pair:
        F = compact_transverse_field(g, 0)
        G = compact_transverse_field(g, 1)
        rep = adjoint_check(alpha, F, G, g)
        assert rep.hermitian_defect < 1e-12
        assert rep.pair_defect < 1e-12


def test_adjoint_warns_on_boundary_support():
    g = build_grid(8, 2 * math.pi)
    F = np.ones(g.shape + (3,), dtype=complex)
    with pytest.warns(UserWarning):
        adjoint_check(0.0, transverse_part(F, g), transverse_part(F, g), g)


def test_expectation_real():
    g = build_grid(12, 4 * math.pi)
    F = compact_transverse_field(g, 3)
    F = F / math.sqrt(grid_sum(np.abs(F) ** 2))
    for ax in range(3):
        val = inner_product(F, apply_position_operator(F, g, 0.0, ax))
        assert abs(val.imag) < 1e-10
