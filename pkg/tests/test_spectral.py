"""Potential factorisation, sandwich matrices, edge projections, eigenvalues."""

import numpy as np
import pytest

from bilap.expansion import geometric_grid
from bilap.lattice import PotentialSpec
from bilap.resolvent import (
    SpectralParam,
    free_biresolvent_boundary,
    windowed_boundary_resolvent,
)
from bilap.spectral import (
    BirmanSchwingerSystem,
    build_M,
    build_projections,
    build_T0,
    build_T0_tilde,
    decompose_potential,
    discrete_eigs,
    embedded_eig_scan,
    m_matrix_grid,
    minv_expansion_probe,
    perturbed_resolvent_boundary,
    regular_point_check,
)

import oracles

DELTA_HALF = PotentialSpec.delta(0.5)
GENERIC = PotentialSpec((-1, 1), [0.3, -0.2, 0.1])
# tuned so the compression of the zero-edge matrix onto the orthogonal
# complement of the moment vectors vanishes identically (2 + a = 4a/|b|
# with a = 0.5, |b| = 0.8)
NONREGULAR = PotentialSpec((-1, 1), [0.5, -0.8, 0.5])


def test_decompose_delta():
    sys_ = decompose_potential(PotentialSpec.delta(-4.0))
    np.testing.assert_array_equal(sys_.sites, [0])
    np.testing.assert_allclose(sys_.v, [2.0])
    np.testing.assert_allclose(sys_.u, [-1.0])


def test_decompose_polynomial_weight():
    n = np.arange(-8, 9)
    V = PotentialSpec((-8, 8), (1.0 + n**2) ** -8.0)
    sys_ = decompose_potential(V)
    np.testing.assert_allclose(sys_.v, (1.0 + n**2) ** -4.0, rtol=1e-14)
    np.testing.assert_array_equal(sys_.u, np.ones(17))


def test_decompose_reconstructs_potential():
    rng = np.random.default_rng(2)
    vals = rng.normal(size=7)
    sys_ = decompose_potential(PotentialSpec((-3, 3), vals))
    np.testing.assert_allclose(sys_.u * sys_.v**2, vals, rtol=1e-14)


def test_decompose_drops_zero_sites():
    sys_ = decompose_potential(PotentialSpec((-1, 2), [0.8, -0.5, 0.0, 0.3]))
    np.testing.assert_array_equal(sys_.sites, [-1, 0, 2])


def test_system_validation():
    ok = dict(sites=np.array([0]), v=np.array([1.0]), u=np.array([1.0]))
    BirmanSchwingerSystem(**ok)
    with pytest.raises(ValueError, match="equal length"):
        BirmanSchwingerSystem(np.array([0, 1]), np.array([1.0]), np.array([1.0]))
    with pytest.raises(ValueError, match="empty"):
        BirmanSchwingerSystem(np.array([]), np.array([]), np.array([]))
    with pytest.raises(ValueError, match="strictly positive"):
        BirmanSchwingerSystem(np.array([0]), np.array([-1.0]), np.array([1.0]))
    with pytest.raises(ValueError, match=r"\+-1"):
        BirmanSchwingerSystem(np.array([0]), np.array([1.0]), np.array([0.5]))


def test_sandwich_matrix_single_site_value():
    sys_ = decompose_potential(DELTA_HALF)
    mu = 0.9
    want = 1.0 + 0.5 * free_biresolvent_boundary(SpectralParam(mu), 0, 0)
    got = build_M(SpectralParam(mu), sys_)
    assert got.shape == (1, 1)
    assert got[0, 0] == pytest.approx(want, rel=1e-14)


def test_sandwich_matrix_is_complex_symmetric_and_conjugate():
    sys_ = decompose_potential(GENERIC)
    for mu in (0.4, 1.2, 1.8):
        plus = build_M(SpectralParam(mu, "plus"), sys_)
        minus = build_M(SpectralParam(mu, "minus"), sys_)
        np.testing.assert_allclose(plus, plus.T, atol=1e-14)
        np.testing.assert_allclose(minus, np.conj(plus), atol=1e-14)


def test_sandwich_matrix_grid_consistency():
    sys_ = decompose_potential(GENERIC)
    mus = np.array([0.5, 1.0, 1.5])
    grid = m_matrix_grid(mus, sys_)
    assert grid.shape == (3, 3, 3)
    for i, mu in enumerate(mus):
        np.testing.assert_allclose(grid[i], build_M(SpectralParam(mu), sys_), atol=0)


def test_sandwich_matrix_never_singular_on_band():
    # numeric sweep backing the absence of embedded eigenvalues
    mus = np.linspace(0.1, 1.9, 19)
    for V in (DELTA_HALF, GENERIC):
        sys_ = decompose_potential(V)
        ssv = min(
            np.linalg.svd(build_M(SpectralParam(m), sys_), compute_uv=False).min()
            for m in mus
        )
        assert ssv > 1e-2


def test_projections_match_gram_schmidt_oracle():
    sys_ = decompose_potential(GENERIC)
    ps = build_projections(sys_)
    P, Q, S0, Pt, Qt = oracles.gram_projections(sys_.v, sys_.sites)
    for got, want in ((ps.P, P), (ps.Q, Q), (ps.S0, S0), (ps.Ptilde, Pt),
                      (ps.Qtilde, Qt)):
        np.testing.assert_allclose(got, want, atol=1e-12)


def test_projection_algebra():
    rng = np.random.default_rng(9)
    sys_ = decompose_potential(PotentialSpec((-4, 4), rng.uniform(0.1, 1.0, 9)))
    ps = build_projections(sys_)
    eye = np.eye(9)
    for X in (ps.P, ps.Q, ps.S0, ps.Ptilde, ps.Qtilde):
        np.testing.assert_allclose(X @ X, X, atol=1e-12)
        np.testing.assert_allclose(X, X.T, atol=1e-14)
    np.testing.assert_allclose(ps.P + ps.Q, eye, atol=1e-14)
    np.testing.assert_allclose(ps.Ptilde + ps.Qtilde, eye, atol=1e-14)
    np.testing.assert_allclose(ps.P @ ps.S0, 0.0 * eye, atol=1e-12)
    np.testing.assert_allclose(ps.S0 @ ps.Q, ps.S0, atol=1e-12)
    # S0 annihilates both moment vectors
    for w in (sys_.v, sys_.sites * sys_.v):
        assert np.max(np.abs(ps.S0 @ w)) < 1e-12 * np.max(np.abs(w))


def test_projections_single_site_degeneracy():
    ps = build_projections(decompose_potential(DELTA_HALF))
    np.testing.assert_allclose(ps.P, [[1.0]])
    np.testing.assert_allclose(ps.Q, [[0.0]])
    np.testing.assert_allclose(ps.S0, [[0.0]])
    assert any("single-site" in note for note in ps.notes)


def test_projections_two_site_s0_vanishes():
    ps = build_projections(decompose_potential(PotentialSpec((0, 1), [1.0, -2.0])))
    assert np.max(np.abs(ps.S0)) < 1e-12


def test_edge_matrices():
    sys1 = decompose_potential(PotentialSpec.delta(-4.0))
    np.testing.assert_allclose(build_T0(sys1), [[-1.0]], atol=1e-15)
    want = -1.0 - 4.0 / (32.0 * np.sqrt(2.0))
    np.testing.assert_allclose(build_T0_tilde(sys1), [[want]], rtol=1e-14)
    sysg = decompose_potential(GENERIC)
    for T in (build_T0(sysg), build_T0_tilde(sysg)):
        np.testing.assert_allclose(T, T.T, atol=1e-14)


def test_regular_point_check_single_site_is_vacuous():
    sys_ = decompose_potential(DELTA_HALF)
    for thr in ("zero", "sixteen"):
        rep = regular_point_check(sys_, thr)
        assert rep.is_regular
        assert rep.smallest_singular_value == np.inf


def test_regular_point_check_generic():
    rng = np.random.default_rng(5)
    vals = rng.uniform(-0.3, 0.3, size=9)
    vals[np.abs(vals) < 0.05] = 0.21
    sys_ = decompose_potential(PotentialSpec((-4, 4), vals))
    for thr in ("zero", "sixteen"):
        rep = regular_point_check(sys_, thr)
        assert rep.is_regular and rep.smallest_singular_value > 1e-3
    # an absurd tolerance flips the verdict without changing the number
    rep = regular_point_check(sys_, "zero", tol=1e6)
    assert not rep.is_regular


def test_constructed_potential_is_not_regular():
    rep = regular_point_check(decompose_potential(NONREGULAR), "zero")
    assert not rep.is_regular
    assert rep.smallest_singular_value < 1e-12


def test_probe_skips_at_non_regular_edge():
    probe = minv_expansion_probe(
        decompose_potential(NONREGULAR), "zero", np.geomspace(1e-3, 1e-2, 5)
    )
    assert probe.skipped
    assert "not regular" in probe.diagnostic
    assert probe.leakage_slope is None


def test_probe_slopes_at_regular_edges():
    sys_ = decompose_potential(PotentialSpec((-1, 2), [0.8, -0.5, 0.0, 0.3]))
    pz = minv_expansion_probe(sys_, "zero", geometric_grid(1e-3, 1e-1))
    assert not pz.skipped
    assert pz.leakage_slope == pytest.approx(1.0, abs=0.1)
    assert pz.sup_inverse_norm < 10.0
    # the square-root regime at the upper edge opens far closer in
    ps = minv_expansion_probe(sys_, "sixteen", geometric_grid(1e-8, 1e-5))
    assert ps.leakage_slope == pytest.approx(0.5, abs=0.05)
    assert ps.sup_inverse_norm < 10.0


def test_probe_grid_validation():
    sys_ = decompose_potential(GENERIC)
    with pytest.raises(ValueError, match="edge distances"):
        minv_expansion_probe(sys_, "zero", np.array([0.5, 2.5]))


def test_perturbed_resolvent_none_is_free():
    p = SpectralParam(1.1)
    assert perturbed_resolvent_boundary(p, None, 2, -1) == free_biresolvent_boundary(
        p, 2, -1
    )


def test_perturbed_resolvent_solves_difference_equation():
    for V in (DELTA_HALF, GENERIC):
        vals = V.on_window(1) if V is GENERIC else np.array([0.5])
        sites = V.sites
        for mu in (0.6, 1.3):
            p = SpectralParam(mu)
            col = np.array(
                [perturbed_resolvent_boundary(p, V, n, 0) for n in range(-9, 10)]
            )
            sten = (
                col[:-4] - 4 * col[1:-3] + 6 * col[2:-2] - 4 * col[3:-1] + col[4:]
            )
            lhs = sten - mu**4 * col[2:-2]
            for s, c in zip(sites, vals):
                lhs[s + 7] += c * col[s + 9]
            want = np.zeros(15, dtype=complex)
            want[7] = 1.0
            np.testing.assert_allclose(lhs, want, atol=1e-9)


def test_perturbed_resolvent_matches_windowed_ladder():
    for V in (DELTA_HALF, GENERIC):
        for mu in (0.7, 1.3):
            want = perturbed_resolvent_boundary(SpectralParam(mu), V, 3, -2)
            got = windowed_boundary_resolvent(mu, 3, -2, V=V)
            assert abs(got - want) / abs(want) < 1e-6


def test_perturbed_resolvent_against_dense_ladder_oracle():
    mu = 1.3
    want = perturbed_resolvent_boundary(SpectralParam(mu), DELTA_HALF, 0, 0)
    got = oracles.dense_boundary_resolvent(mu, 0, 0, potential=([0], [0.5]))
    assert abs(got - want) / abs(want) < 2e-5


def test_perturbed_resolvent_symmetry_and_conjugate():
    p = SpectralParam(0.8, "plus")
    m = SpectralParam(0.8, "minus")
    for n, mm in ((2, -1), (0, 3)):
        a = perturbed_resolvent_boundary(p, GENERIC, n, mm)
        assert a == pytest.approx(
            perturbed_resolvent_boundary(p, GENERIC, mm, n), rel=1e-13
        )
        assert perturbed_resolvent_boundary(m, GENERIC, n, mm) == pytest.approx(
            np.conj(a), rel=1e-13
        )


def test_perturbed_resolvent_second_identity():
    # R_V = R0 - R0 V R0 + R0 V R_V V R0, all entries at the boundary
    sites = GENERIC.sites
    vals = GENERIC.on_window(1)
    for mu in (0.6, 1.2):
        p = SpectralParam(mu)
        n, m = 2, -1
        r0 = {
            (a, b): free_biresolvent_boundary(p, a, b)
            for a in (n, *sites)
            for b in (m, *sites)
        }
        rv = {
            (a, b): perturbed_resolvent_boundary(p, GENERIC, a, b)
            for a in sites
            for b in sites
        }
        first = sum(r0[n, j] * c * r0[j, m] for j, c in zip(sites, vals))
        second = sum(
            r0[n, j] * cj * rv[j, l] * cl * r0[l, m]
            for j, cj in zip(sites, vals)
            for l, cl in zip(sites, vals)
        )
        want = r0[n, m] - first + second
        got = perturbed_resolvent_boundary(p, GENERIC, n, m)
        assert got == pytest.approx(want, abs=1e-10)


def test_perturbed_resolvent_refuses_singular_sandwich():
    with pytest.raises(ValueError, match="possible embedded eigenvalue"):
        perturbed_resolvent_boundary(
            SpectralParam(1.0), GENERIC, 0, 0, singular_tol=1e10
        )


def test_discrete_eigs_delta_counts():
    above = discrete_eigs(PotentialSpec.delta(5.0), 32)
    assert len(above) == 1 and above[0][0] > 16.0
    below = discrete_eigs(PotentialSpec.delta(-5.0), 32)
    assert len(below) == 1 and below[0][0] < 0.0


def test_discrete_eigs_shallow_state_value():
    out = discrete_eigs(DELTA_HALF, 256)
    assert len(out) == 1
    lam, vec = out[0]
    assert lam == pytest.approx(16.00798298037027, abs=1e-8)
    assert vec.values[256] != 0.0  # peaked at the origin


def test_discrete_eigs_validation_and_empty():
    assert discrete_eigs(None, 64) == []
    with pytest.raises(ValueError, match="window_radius must be >= 4"):
        discrete_eigs(DELTA_HALF, 3)
    # a state this shallow spreads over hundreds of sites
    with pytest.raises(ValueError, match="localization ratio"):
        discrete_eigs(GENERIC, 128)


def test_embedded_scan_clean_for_delta():
    rep = embedded_eig_scan(PotentialSpec.delta(1.0), (128, 256))
    assert rep.verdict == "no embedded eigenvalues detected"
    assert rep.stable_candidates == ()
    rep = embedded_eig_scan(None, (64, 128))
    assert rep.stable_candidates == ()
    with pytest.raises(ValueError, match="at least two window radii"):
        embedded_eig_scan(DELTA_HALF, (128,))
