"""Spectral engine: twisted series, Dirichlet solves, residues, pi-cone lifts."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conemaps import (
    Aliasing,
    AntiholoPower,
    BGrid,
    HoloPower,
    NonConeMapping,
    OutOfDisc,
    PiConeLift,
    TwistViolation,
    TwistedSeries,
    analyze_boundary,
    descend_pi_lift,
    hopf,
    identity_series,
    mobius,
    mobius_inverse,
    parse_series_spec,
    pi_cone_residue,
    pi_lift_hopf_pushforward,
    recentre_boundary,
    residue_from_series,
    series_boundary_callable,
    series_energy,
    solve_augmented_dirichlet,
    solve_dirichlet,
    synthesize_on_grid,
    tension,
    total_energy,
    wedge_trace,
)

ALPHA3 = 1.0 / 3.0


# ---------------------------------------------------------------------------
# series containers


def test_parse_series_spec_round_trip():
    s = parse_series_spec(ALPHA3, "a-1=0.1,a2=0.05j")
    assert s.a(0) == 1.0 + 0j  # identity coefficient implied
    assert s.a(-1) == pytest.approx(0.1)
    assert s.a(2) == pytest.approx(0.05j)
    assert s.J == 4
    # explicit a0 override wins
    s2 = parse_series_spec(0.5, "a0=2.0")
    assert s2.a(0) == 2.0 + 0j


def test_parse_series_spec_rejects_bad_names():
    with pytest.raises(ValueError):
        parse_series_spec(0.5, "b1=0.1")


def test_series_validation_and_helpers():
    with pytest.raises(ValueError):
        TwistedSeries(alpha=0.5, J=3, coeffs={0: 1.0})
    with pytest.raises(ValueError):
        TwistedSeries(alpha=0.5, J=4, coeffs={5: 1.0})
    s = TwistedSeries(alpha=0.5, J=4, coeffs={0: 1.0, 2: 0.0, -4: 0.25})
    assert 2 not in dict(s.items())  # zero coefficients are dropped
    assert s.tail == pytest.approx(0.25)  # |a_J| + |a_-J|
    s2 = s.with_coefficient(1, 0.3j)
    assert s2.a(1) == 0.3j and s.a(1) == 0j
    assert identity_series(0.7).a(0) == 1.0 + 0j


def test_boundary_frequencies_are_twisted():
    s = identity_series(0.25)
    assert s.boundary_frequency(0) == pytest.approx(1.0)
    assert s.boundary_frequency(1) == pytest.approx(5.0)
    assert s.boundary_frequency(-1) == pytest.approx(-3.0)


# ---------------------------------------------------------------------------
# boundary analysis


def test_analyze_boundary_recovers_series_coefficients():
    series = TwistedSeries(alpha=ALPHA3, J=4, coeffs={0: 1.0, -1: 0.1, 2: 0.03j})
    trace = series_boundary_callable(series)
    theta = 2.0 * np.pi * np.arange(128) / 128
    wedged = wedge_trace(trace(theta), theta, ALPHA3)
    recovered, analysis = analyze_boundary(wedged, ALPHA3, J=4)
    for j in (-1, 0, 2):
        assert abs(recovered.a(j) - series.a(j)) < 1e-12
    assert analysis.truncation_residual < 1e-12


def test_analyze_boundary_half_angle_odd_frequencies():
    # alpha = 1/2: mode j sits at wedge frequency 1 + 2j, exactly the odd
    # integers
    series, analysis = analyze_boundary(
        lambda tt: np.exp(1j * tt) + 0.2 * np.exp(3j * tt), 0.5, J=4)
    assert abs(series.a(0) - 1.0) < 1e-12
    assert abs(series.a(1) - 0.2) < 1e-12


def test_analyze_boundary_twist_violation():
    # a real cosine cannot satisfy phi(2 pi alpha) = e^{2 pi i alpha} phi(0)
    with pytest.raises(TwistViolation):
        analyze_boundary(lambda tt: np.cos(tt) + 2.0, 0.4, J=4)


def test_analyze_boundary_aliasing_guard():
    values = np.exp(1j * 2.0 * np.pi * 0.4 * np.arange(16) / 16)
    with pytest.raises(Aliasing):
        analyze_boundary(values, 0.4, J=8)


# ---------------------------------------------------------------------------
# synthesis


def test_synthesize_identity_is_exact():
    grid = BGrid(t_min=-6.0, n_t=49, n_theta=16)
    u = synthesize_on_grid(identity_series(ALPHA3), grid)
    assert np.max(np.abs(u.samples - grid.z)) < 1e-14
    assert u.has_analytic
    assert tension(u).sup_normalized < 1e-14


def test_synthesize_pure_antiholomorphic_mode_closed_form():
    # j = -1 at alpha = 1/3: disc exponent 2/3, cubed through the chart
    # gives u(z) = conj(z)^2
    grid = BGrid(t_min=-4.0, n_t=33, n_theta=16)
    series = TwistedSeries(alpha=ALPHA3, J=4, coeffs={-1: 1.0})
    u = synthesize_on_grid(series, grid)
    assert np.max(np.abs(u.samples - np.conj(grid.z) ** 2)) < 1e-13


def test_synthesize_pure_holomorphic_mode_closed_form():
    # j = 1 at alpha = 1/2: disc exponent 3/2, squared gives u(z) = z^3
    grid = BGrid(t_min=-4.0, n_t=33, n_theta=16)
    series = TwistedSeries(alpha=0.5, J=4, coeffs={1: 1.0})
    u = synthesize_on_grid(series, grid)
    assert np.max(np.abs(u.samples - grid.z**3)) < 1e-13


def test_synthesized_mixed_map_solves_cartesian_harmonic_equation():
    # independent oracle: 5-point cartesian stencils of the synthesized map
    # at an off-grid base point must satisfy u_zzbar + Gamma u_z u_zbar = 0
    from conemaps.cone_spectral import synthesize_solution
    from conemaps.geometry import wedge_coordinates

    alpha = ALPHA3
    series = TwistedSeries(alpha=alpha, J=4, coeffs={0: 1.0, -1: 0.1, 1: 0.05})

    def u_at(z):
        # push z into the sector chart, evaluate the wedged series there,
        # and pull the value back through the same power chart
        zt = np.abs(z) ** alpha * np.exp(1j * alpha * np.mod(np.angle(z), 2 * np.pi))
        ut = synthesize_solution(series, zt)
        return np.abs(ut) ** (1.0 / alpha) * np.exp(1j * np.angle(ut) / alpha)

    def equation_residual(z0, h):
        u0 = u_at(z0)
        up = u_at(z0 + h)
        um = u_at(z0 - h)
        uip = u_at(z0 + 1j * h)
        uim = u_at(z0 - 1j * h)
        lap = (up + um + uip + uim - 4.0 * u0) / h**2  # 4 u_zzbar
        u_z = 0.5 * ((up - um) - 1j * (uip - uim)) / (2 * h)
        u_zbar = 0.5 * ((up - um) + 1j * (uip - uim)) / (2 * h)
        gamma = (alpha - 1.0) / u0
        return abs(0.25 * lap + gamma * u_z * u_zbar)

    z0 = 0.3 + 0.2j
    coarse = equation_residual(z0, 2e-3)
    fine = equation_residual(z0, 1e-3)
    assert fine < 3e-6  # pure stencil truncation at h = 1e-3
    assert coarse / fine > 3.0  # second-order decay: the residual is FD error


def test_synthesize_rejects_map_through_cone_point():
    grid = BGrid(t_min=-4.0, n_t=33, n_theta=16)
    series = TwistedSeries(alpha=0.5, J=4, coeffs={0: 1.0, 1: -1.0})
    with pytest.raises(NonConeMapping):
        synthesize_on_grid(series, grid)  # u vanishes at r=1, theta=0


# ---------------------------------------------------------------------------
# residue and energy in closed form


def test_residue_from_series_closed_form():
    s = TwistedSeries(alpha=ALPHA3, J=4, coeffs={0: 1.0, -1: 0.1})
    assert residue_from_series(s) == pytest.approx(0.2, rel=1e-14)
    # imaginary coefficient conjugates
    s2 = TwistedSeries(alpha=ALPHA3, J=4, coeffs={0: 1.0, -1: -0.05j})
    assert residue_from_series(s2) == pytest.approx(0.1j, rel=1e-14)


def test_residue_series_vs_contour_includes_a0_factor():
    # the contour value carries the a_0 factor that the normalized formula
    # a_0 conj(a_-1)(1/alpha - 1) makes explicit
    grid = BGrid(t_min=-8.0, n_t=97, n_theta=64)
    s = TwistedSeries(alpha=ALPHA3, J=4, coeffs={0: 2.0, -1: 0.1})
    u = synthesize_on_grid(s, grid)
    phi = hopf(u)
    assert residue_from_series(s) == pytest.approx(0.4, rel=1e-14)
    assert abs(phi.residue_at_origin - 0.4) < 1e-10


def test_series_energy_closed_forms():
    assert series_energy(identity_series(0.25), 0.0, 1.0) == pytest.approx(
        2.0 * np.pi, rel=1e-14)  # pi / (2 alpha)
    r0 = np.exp(-8.0)
    expected = np.pi / (2 * ALPHA3) * (1.0 - r0 ** (2 * ALPHA3))
    assert series_energy(identity_series(ALPHA3), r0, 1.0) == pytest.approx(
        expected, rel=1e-14)


def test_series_energy_matches_grid_quadrature():
    s = TwistedSeries(alpha=ALPHA3, J=4, coeffs={0: 1.0, 1: 0.1, -2: 0.05})
    errs = []
    for n_t in (257, 513):
        grid = BGrid(t_min=-8.0, n_t=n_t, n_theta=16)
        u = synthesize_on_grid(s, grid)
        exact = series_energy(s, float(grid.r[0]), 1.0)
        errs.append(abs(total_energy(u) - exact))
    assert errs[0] < 2e-7  # quadrature truncation only
    assert errs[0] / errs[1] > 12.0  # fourth-order radial rule


# ---------------------------------------------------------------------------
# Moebius recentring


@settings(max_examples=40, deadline=None)
@given(
    wr=st.floats(-0.4, 0.4), wi=st.floats(-0.4, 0.4),
    zr=st.floats(-0.7, 0.7), zi=st.floats(-0.7, 0.7),
)
def test_mobius_roundtrip_and_disc_preservation(wr, wi, zr, zi):
    w = wr + 1j * wi
    z = zr + 1j * zi
    assert abs(mobius_inverse(w, mobius(w, z)) - z) < 1e-12
    assert abs(mobius(w, w)) < 1e-14
    boundary = np.exp(1j * np.linspace(0, 2 * np.pi, 9))
    assert np.max(np.abs(np.abs(mobius(w, boundary)) - 1.0)) < 1e-12


def test_recentre_boundary_identity_shift():
    # recentring the identity trace at w samples the unit circle at the
    # Moebius preimage angles
    trace = lambda th: np.exp(1j * th)
    w = 0.2 - 0.1j
    moved = recentre_boundary(trace, w)
    th = np.linspace(0.0, 2 * np.pi, 7)
    expected = mobius_inverse(w, np.exp(1j * th))
    assert np.max(np.abs(moved(th) - expected)) < 1e-13


# ---------------------------------------------------------------------------
# Dirichlet solves


def test_solve_dirichlet_identity_trace():
    u, rep = solve_dirichlet(lambda th: np.exp(1j * th), ALPHA3)
    assert abs(rep.series.a(0) - 1.0) < 1e-12
    assert rep.boundary_distance < 1e-10
    assert rep.near_identity
    assert not rep.requires_translation
    assert abs(rep.residue) < 1e-12
    assert np.max(np.abs(u.samples - u.grid.z)) < 1e-10


def test_solve_dirichlet_residue_report():
    s = TwistedSeries(alpha=0.3, J=4, coeffs={0: 1.0, -1: 0.05})
    u, rep = solve_dirichlet(s, 0.3)
    assert rep.residue == pytest.approx(0.05 * (1.0 / 0.3 - 1.0), rel=1e-13)
    assert not rep.requires_translation  # alpha <= 1/2 never needs the shift
    assert rep.truncation_residual == 0.0  # series adopted as-is


def test_solve_dirichlet_translation_flag_above_half():
    s = TwistedSeries(alpha=0.75, J=4, coeffs={0: 1.0, -1: 0.05})
    _, rep = solve_dirichlet(s, 0.75)
    assert rep.requires_translation


def test_solve_dirichlet_reports_truncation():
    # frequency content beyond the truncation window shows up as residual
    def trace(th):
        base = np.exp(1j * th)
        return base * np.exp(0.02 * np.cos(40.0 * th))

    _, rep = solve_dirichlet(trace, ALPHA3, J=6, n_samples=256)
    assert rep.truncation_residual > 1e-4


def test_solve_dirichlet_rotation_equivariance():
    # rotating the boundary samples rotates the solution samples exactly
    grid = BGrid(t_min=-6.0, n_t=33, n_theta=32)
    series = TwistedSeries(alpha=ALPHA3, J=4, coeffs={0: 1.0, 1: 0.1, -2: 0.05j})
    trace = series_boundary_callable(series)
    values = trace(2.0 * np.pi * np.arange(32) / 32)
    k = 5
    u1, _ = solve_dirichlet(values, ALPHA3, grid=grid, J=8)
    u2, _ = solve_dirichlet(np.roll(values, -k), ALPHA3, grid=grid, J=8)
    assert np.max(np.abs(u2.samples - np.roll(u1.samples, -k, axis=1))) < 1e-10


# ---------------------------------------------------------------------------
# augmented (cone-point translated) solves


def test_augmented_identity_needs_no_translation():
    u, w, rep = solve_augmented_dirichlet(identity_series(0.75), 0.75)
    assert w == 0j
    assert rep.n_steps == 0
    assert np.max(np.abs(u.samples - u.grid.z)) < 1e-10


def test_augmented_kills_a_minus_one_and_scales_linearly():
    ws = []
    for eps in (1e-3, 1e-4):
        s = TwistedSeries(alpha=0.75, J=4, coeffs={0: 1.0, -1: eps})
        _, w, rep = solve_augmented_dirichlet(s, 0.75)
        assert abs(rep.dirichlet.series.a(-1)) < 1e-9
        ws.append(w)
    ratio = abs(ws[1]) / abs(ws[0])
    assert 0.05 < ratio < 0.2  # first-order response to the data size


def test_augmented_window_guard():
    s = TwistedSeries(alpha=0.75, J=4, coeffs={0: 1.0, -1: 0.05})
    with pytest.raises(OutOfDisc):
        solve_augmented_dirichlet(s, 0.75, window=1e-4)


# ---------------------------------------------------------------------------
# cone angle pi: the double cover


def test_pi_cone_residue_closed_form():
    lift = PiConeLift(a=2.0, b=0.1j)
    assert pi_cone_residue(lift) == pytest.approx(-0.05j, rel=1e-14)
    assert lift.orientation_ok
    assert not PiConeLift(a=0.1, b=0.5).orientation_ok


def test_pi_lift_pushforward_matches_formula():
    grid = BGrid(t_min=-8.0, n_t=65, n_theta=32)
    lift = PiConeLift(a=1.2 - 0.3j, b=0.4 + 0.2j,
                      v=(HoloPower(0.05, 3), AntiholoPower(0.02j, 5)))
    pushed = pi_lift_hopf_pushforward(lift, grid)
    assert abs(pushed.residue_at_origin - pi_cone_residue(lift)) < 1e-12
    assert pushed.residue_deviation < 1e-12


def test_pi_lift_validation():
    from conemaps import FormViolation
    with pytest.raises(FormViolation):
        PiConeLift(a=0.0, b=1.0)
    with pytest.raises(ValueError):
        HoloPower(1.0, 1)  # remainder powers start at 2


def test_descend_pi_lift_is_harmonic():
    grid = BGrid(t_min=-6.0, n_t=49, n_theta=16)
    lift = PiConeLift(a=1.0, b=0.2, v=HoloPower(0.1, 3))
    u = descend_pi_lift(lift, grid)
    assert u.target.alpha.alpha == 0.5
    assert tension(u).sup_normalized < 1e-12


# ---------------------------------------------------------------------------
# spectral properties


@st.composite
def small_series(draw):
    alpha = draw(st.sampled_from([0.25, ALPHA3, 0.5, 0.75]))
    coeffs = {0: 1.0 + 0j}
    for j in (-2, -1, 1, 2):
        if draw(st.booleans()):
            re = draw(st.floats(-0.05, 0.05))
            im = draw(st.floats(-0.05, 0.05))
            coeffs[j] = re + 1j * im
    return TwistedSeries(alpha=alpha, J=4, coeffs=coeffs)


@settings(max_examples=20, deadline=None)
@given(series=small_series())
def test_analysis_inverts_synthesis(series):
    trace = series_boundary_callable(series)
    theta = 2.0 * np.pi * np.arange(64) / 64
    wedged = wedge_trace(trace(theta), theta, series.alpha)
    recovered, _ = analyze_boundary(wedged, series.alpha, J=4)
    for j in range(-4, 5):
        assert abs(recovered.a(j) - series.a(j)) < 1e-10


@settings(max_examples=20, deadline=None)
@given(series=small_series())
def test_synthesized_solutions_are_harmonic(series):
    grid = BGrid(t_min=-6.0, n_t=33, n_theta=16)
    u = synthesize_on_grid(series, grid)
    assert tension(u).sup_normalized < 1e-11
