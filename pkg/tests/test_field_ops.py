"""Field operators: energy, tension, Hopf differential, Bochner machinery."""

import numpy as np
import pytest

from conemaps import (
    BGrid,
    ConicMetric,
    InconsistentResidue,
    NotHarmonic,
    SplitFails,
    TwistedSeries,
    bochner_check,
    contour_residue,
    energy_density,
    energy_gradient_residue,
    energy_hessian_residue,
    h_l_jacobian,
    hopf,
    hopf_path_derivative,
    identity_map,
    identity_series,
    pullback_split,
    synthesize_on_grid,
    tension,
    total_energy,
)
from conemaps.field_ops import conformal_energy_coefficient

ALPHA3 = 1.0 / 3.0


def small_grid(n_t=49, n_theta=16, t_min=-6.0):
    return BGrid(t_min=t_min, n_t=n_t, n_theta=n_theta)


# ---------------------------------------------------------------------------
# energy


def test_identity_energy_density_closed_form():
    grid = small_grid()
    u = identity_map(grid, ConicMetric(alpha=ALPHA3))
    e = energy_density(u)
    expected = grid.rmesh ** (2 * ALPHA3 - 2.0)
    assert np.max(np.abs(e - expected) / expected) < 1e-13


def test_scaled_identity_energy_density():
    # u = lam z, synthesized so the exact derivative samples ride along
    grid = small_grid()
    lam = 0.7 * np.exp(0.3j)
    lam_wedge = abs(lam) ** ALPHA3 * np.exp(1j * ALPHA3 * np.angle(lam))
    s = TwistedSeries(alpha=ALPHA3, J=4, coeffs={0: lam_wedge})
    u = synthesize_on_grid(s, grid)
    assert np.max(np.abs(u.samples - lam * grid.z)) < 1e-13
    e = energy_density(u)
    expected = abs(lam) ** (2 * ALPHA3) * grid.rmesh ** (2 * ALPHA3 - 2.0)
    assert np.max(np.abs(e - expected) / expected) < 1e-12


def test_total_energy_identity_closed_form():
    for alpha in (0.25, ALPHA3, 0.5, 0.75):
        grid = BGrid(t_min=-8.0, n_t=193, n_theta=16)
        u = identity_map(grid, ConicMetric(alpha=alpha))
        expected = np.pi / (2 * alpha) * (1.0 - np.exp(2 * alpha * grid.t_min))
        assert total_energy(u) == pytest.approx(expected, rel=1e-6)


def test_total_energy_row_restriction():
    grid = BGrid(t_min=-8.0, n_t=193, n_theta=16)
    u = identity_map(grid, ConicMetric(alpha=0.5))
    rows = (96, 192)  # outer half: r in [e^-4, 1]
    expected = np.pi / (2 * 0.5) * (1.0 - np.exp(2 * 0.5 * (-4.0)))
    assert total_energy(u, rows=rows) == pytest.approx(expected, rel=1e-6)


# ---------------------------------------------------------------------------
# tension


def test_identity_is_harmonic_into_any_cone():
    grid = small_grid()
    for alpha in (0.25, 0.5, 0.75):
        u = identity_map(grid, ConicMetric(alpha=alpha))
        assert tension(u).sup_normalized == 0.0


def test_tension_closed_form_for_conjugate_perturbation():
    # u = z + eps conj(z): u_zzbar = 0, so the normalized defect is exactly
    # |z|^2 Gamma u_z u_zbar with Gamma = (alpha-1)/u; the stencil route
    # must reproduce it up to fourth-order truncation
    eps = 0.01
    alpha = 0.5
    rels = []
    for n_t in (49, 97):
        grid = small_grid(n_t=n_t)
        u = identity_map(grid, ConicMetric(alpha=alpha))
        u = u.replace_samples(grid.z + eps * np.conj(grid.z))
        res = tension(u, use_analytic=False)
        z = grid.z
        expected = np.abs(z) ** 2 * (alpha - 1.0) * eps / (z + eps * np.conj(z))
        inner = grid.interior_rows()
        rels.append(np.max(
            np.abs(res.normalized[inner] - expected[inner])
            / np.abs(expected[inner])))
    assert rels[1] < 5e-5
    assert rels[0] / rels[1] > 10.0  # fourth-order radial stencils


def test_tension_tau_normalization_relation():
    grid = small_grid()
    u = identity_map(grid, ConicMetric(alpha=0.5))
    u = u.replace_samples(grid.z + 0.01 * np.conj(grid.z))
    res = tension(u, use_analytic=False)
    sigma = np.ones(grid.shape)  # flat domain disc
    recon = 4.0 * res.normalized / (sigma * grid.rmesh**2)
    assert np.max(np.abs(res.tau - recon)) < 1e-12


def test_tension_analytic_route_on_synthesized_map():
    grid = small_grid()
    s = TwistedSeries(alpha=ALPHA3, J=4, coeffs={0: 1.0, 1: 0.1, -2: 0.05})
    u = synthesize_on_grid(s, grid)
    assert tension(u).sup_normalized < 1e-12


# ---------------------------------------------------------------------------
# contour residues


def test_contour_residue_simple_pole():
    grid = BGrid(t_min=-8.0, n_t=129, n_theta=64)
    value, deviation, per_radius = contour_residue(1.0 / grid.z, grid=grid)
    assert abs(value - 1.0) < 1e-14
    assert deviation < 1e-14
    assert len(per_radius) == 3


def test_contour_residue_ignores_other_powers():
    grid = BGrid(t_min=-8.0, n_t=129, n_theta=64)
    z = grid.z
    phi = 1.0 / z + 0.3 / z**3 + 2.0 + z
    value, deviation, _ = contour_residue(phi, grid=grid)
    assert abs(value - 1.0) < 1e-12
    assert deviation < 1e-12
    value2, _, _ = contour_residue(1.0 / z**2, grid=grid)
    assert abs(value2) < 1e-13


def test_contour_residue_flags_radius_dependence():
    # conj(z) has radius-dependent circle integrals, not a meromorphic tail
    grid = BGrid(t_min=-4.0, n_t=65, n_theta=32)
    with pytest.raises(InconsistentResidue):
        contour_residue(np.conj(grid.z), grid=grid, tol=1e-10)


def test_hopf_residue_and_dbar_on_synthesized_solution():
    s = TwistedSeries(alpha=ALPHA3, J=4, coeffs={0: 1.0, -1: 0.1})
    dbars = []
    for n_t in (97, 193):
        grid = BGrid(t_min=-8.0, n_t=n_t, n_theta=64)
        u = synthesize_on_grid(s, grid)
        ph = hopf(u)
        assert abs(ph.residue_at_origin - 0.2) < 1e-12
        assert ph.residue_deviation < 1e-12
        assert ph.eps_report == pytest.approx(0.1)
        dbars.append(ph.dbar_residual)
    # the holomorphy probe differentiates phi by stencils, so it reads pure
    # truncation on an exactly holomorphic field and refines at its order
    assert dbars[0] < 2e-4
    assert dbars[0] / dbars[1] > 8.0


# ---------------------------------------------------------------------------
# energy bookkeeping along cone-point translations


def test_gradient_residue_pairing():
    class Stub:
        residue_at_origin = 0.2 + 0.0j

    assert energy_gradient_residue(1.0, Stub()) == pytest.approx(0.4 * np.pi)
    assert energy_gradient_residue(1j, Stub()) == pytest.approx(0.0, abs=1e-15)
    assert energy_gradient_residue(-0.5, Stub()) == pytest.approx(-0.2 * np.pi)


def test_hessian_residue_uses_derivative_field():
    class Stub:
        residue_at_origin = -0.3 + 0.1j

    expected = float(np.real(2 * np.pi * (0.2 + 0.4j) * (-0.3 + 0.1j)))
    assert energy_hessian_residue(0.2 + 0.4j, Stub()) == pytest.approx(expected)


def test_hopf_path_derivative_is_exact_for_linear_coefficient_paths():
    # a_-1(s) = 0.1(1 + s): phi is linear in conj(a_-1), so the central
    # difference of the Hopf field is the exact path derivative and its
    # residue is d/ds [conj(a_-1(s))](1/alpha - 1) = 0.2 at alpha = 1/3
    grid = BGrid(t_min=-8.0, n_t=97, n_theta=32)
    delta = 1e-3
    fields = []
    for sgn in (1.0, -1.0):
        s = TwistedSeries(alpha=ALPHA3, J=4,
                          coeffs={0: 1.0, -1: 0.1 * (1.0 + sgn * delta)})
        fields.append(synthesize_on_grid(s, grid))
    dot = hopf_path_derivative(fields[0], fields[1], delta)
    assert abs(dot.residue_at_origin - 0.2) < 1e-9
    assert dot.residue_deviation < 1e-9


# ---------------------------------------------------------------------------
# h - l decomposition


def test_h_l_jacobian_identity():
    grid = small_grid()
    u = identity_map(grid, ConicMetric(alpha=ALPHA3))
    h, l, jac = h_l_jacobian(u)
    assert np.max(np.abs(h - energy_density(u))) < 1e-13
    assert np.max(np.abs(l)) == 0.0
    assert np.max(np.abs(jac - h)) < 1e-13


def test_h_l_sum_and_difference_identities():
    grid = small_grid()
    u = identity_map(grid, ConicMetric(alpha=0.5))
    u = u.replace_samples(grid.z + 0.05 * np.conj(grid.z) ** 2)
    h, l, jac = h_l_jacobian(u, use_analytic=False)
    e = energy_density(u, use_analytic=False)
    scale = np.max(np.abs(e))
    assert np.max(np.abs(h + l - e)) < 1e-13 * scale
    assert np.max(np.abs((h - l) - jac)) < 1e-13 * scale


# ---------------------------------------------------------------------------
# Bochner machinery


def test_bochner_identity_map_closed_form():
    # e = r^(2 alpha - 2) gives lap_b e = (2 alpha - 2)^2 e and both
    # curvature terms vanish; the minimum slack over the interior sits at
    # the outer rows where e is smallest, hence equals (2 alpha - 2)^2
    grid = BGrid(t_min=-6.0, n_t=97, n_theta=16)
    u = identity_map(grid, ConicMetric(alpha=ALPHA3))
    rep = bochner_check(u)
    # interior rows end two nodes in from the edge, where e is smallest
    t_edge = grid.t[grid.interior_rows()][-1]
    expected = (2 * ALPHA3 - 2.0) ** 2 * np.exp((2 * ALPHA3 - 2.0) * t_edge)
    assert rep.inequality_min_slack == pytest.approx(expected, rel=1e-6)
    assert rep.identity_sup_residual < 1e-9
    assert rep.tension_sup < 1e-12


def test_bochner_rejects_non_harmonic_input():
    grid = small_grid()
    u = identity_map(grid, ConicMetric(alpha=0.5))
    u = u.replace_samples(grid.z + 0.3 * np.conj(grid.z))
    with pytest.raises(NotHarmonic):
        bochner_check(u)


# ---------------------------------------------------------------------------
# pullback splitting


def test_pullback_split_identity_has_exact_unit_window():
    # phi = 0 for the identity: with omega the energy coefficient itself,
    # h1 = (1 - epsilon) omega, so the window is exactly epsilon in (0, 1)
    grid = small_grid()
    u = identity_map(grid, ConicMetric(alpha=ALPHA3))
    omega = conformal_energy_coefficient(u)
    rep = pullback_split(u, 0.9, omega=omega)
    assert rep.h1_min > 0.0
    assert rep.h2_min_eig > 0.0
    # both factors are powers of r alone, hence flat; the second factor
    # goes through the general-metric curvature stencils, so it carries
    # their truncation rather than rounding alone
    assert abs(rep.h1_curvature_max) < 1e-8
    assert abs(rep.h2_curvature_max) < 1e-5
    with pytest.raises(SplitFails):
        pullback_split(u, 1.0, omega=omega)


def test_pullback_split_window_on_harmonic_map():
    grid = small_grid()
    s = TwistedSeries(alpha=ALPHA3, J=4, coeffs={0: 1.0, -1: 0.05})
    u = synthesize_on_grid(s, grid)
    omega = conformal_energy_coefficient(u)
    rep = pullback_split(u, 0.5, omega=omega)
    assert rep.h1_min > 0.0
    assert rep.h2_min_eig > 0.0
    assert np.isfinite(rep.h1_curvature_max)
    assert np.isfinite(rep.h2_curvature_max)
    assert rep.s.shape == grid.shape
    with pytest.raises(SplitFails):
        pullback_split(u, 0.05, omega=omega)  # |phi| overwhelms the gap
    with pytest.raises(SplitFails):
        pullback_split(u, 1.2, omega=omega)  # conformal part loses out


def test_pullback_split_degenerate_map_has_empty_window():
    # |u_z| = |u_zbar| everywhere: h2 needs epsilon^2 omega^2 > 3 |phi|^2
    # while h1 needs the opposite strict inequality, so no epsilon works
    grid = small_grid()
    u = identity_map(grid, ConicMetric(alpha=0.5))
    u = u.replace_samples(grid.z + np.conj(grid.z) + 3.0)
    for eps in (0.1, 0.5, 2.0):
        with pytest.raises(SplitFails):
            pullback_split(u, eps, use_analytic=False)
