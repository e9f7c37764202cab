"""Geometry layer: cone angles, metrics, grids, curvature, weighted norms."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conemaps import (
    AngleClass,
    BGrid,
    ConeAngleSpec,
    ConicMetric,
    InsufficientRegularity,
    RadialTrigScalar,
    SumScalar,
    WeightedNormSpec,
    ZeroInput,
    branch_power,
    gauss_curvature,
    radial_trig_mu,
    round_cone_metric,
    unwedge,
    wedge_coordinates,
    weighted_b_norm,
)
from conemaps.geometry import brioschi_curvature, fornberg_weights, row_window


# ---------------------------------------------------------------------------
# cone angle


def test_angle_classification_brackets_one_half():
    assert ConeAngleSpec(0.49).classification is AngleClass.LESS_THAN_PI
    assert ConeAngleSpec(0.5).classification is AngleClass.EQUAL_PI
    assert ConeAngleSpec(0.51).classification is AngleClass.GREATER_THAN_PI


def test_angle_value():
    assert ConeAngleSpec(0.25).angle == pytest.approx(np.pi / 2.0, abs=1e-15)


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2, 1.3])
def test_angle_out_of_range_rejected(alpha):
    with pytest.raises(ValueError):
        ConeAngleSpec(alpha)


# ---------------------------------------------------------------------------
# wedge chart


def test_wedge_chart_half_angle_values():
    # z^alpha / alpha at alpha = 1/2: 1 -> 2 and e^{i pi} -> 2i
    assert wedge_coordinates(1.0 + 0j, 0.5) == pytest.approx(2.0 + 0j, abs=1e-14)
    assert wedge_coordinates(np.exp(1j * np.pi), 0.5) == pytest.approx(2j, abs=1e-13)


def test_wedge_branch_follows_disc_angle():
    # theta just below 2 pi stays on the upper branch, never jumps negative
    z = np.exp(1j * (2.0 * np.pi - 1e-6))
    zt = wedge_coordinates(z, 0.5)
    assert np.angle(zt) > 3.0  # close to pi, not ~ -pi/... from the cut


def test_wedge_unwedge_roundtrip():
    rng = np.random.default_rng(0)
    z = rng.uniform(0.05, 1.0, 100) * np.exp(1j * rng.uniform(0.0, 2 * np.pi, 100))
    for alpha in (0.25, 1.0 / 3.0, 0.5, 0.75):
        back = unwedge(wedge_coordinates(z, alpha), alpha)
        assert np.max(np.abs(back - z)) < 1e-12


def test_wedge_rejects_cone_point():
    with pytest.raises(ZeroInput):
        wedge_coordinates(np.array([0.5, 0.0]), 0.5)
    with pytest.raises(ZeroInput):
        unwedge(0.0 + 0j, 0.5)


def test_branch_power_uses_positive_angle_branch():
    # theta = 3 pi/2 in [0, 2 pi): sqrt lands at e^{i 3 pi / 4}, upper half
    val = branch_power(np.exp(1.5j * np.pi), 0.5)
    assert val == pytest.approx(np.exp(0.75j * np.pi), abs=1e-14)


# ---------------------------------------------------------------------------
# conic metric


def test_round_cone_density_closed_form():
    m = round_cone_metric(1.0 / 3.0)
    # |u|^(2(alpha-1)) at |u| = 1/2: (1/2)^(-4/3) = 2^(4/3)
    assert m.rho(0.5 + 0j) == pytest.approx(2.0 ** (4.0 / 3.0), rel=1e-14)
    assert m.is_round


def test_metric_validation():
    with pytest.raises(ValueError):
        ConicMetric(alpha=0.5, c=-1.0)
    mu = RadialTrigScalar(amplitude=0.1, power=2.0)
    with pytest.raises(ValueError):
        ConicMetric(alpha=0.5, mu=mu)  # decay rate nu missing
    with pytest.raises(ValueError):
        ConicMetric(alpha=0.5, mu=mu, nu=0.9)  # nu must exceed 2 alpha
    with pytest.raises(ValueError):
        RadialTrigScalar(amplitude=0.1, power=0.0)  # mu must vanish at the tip


def test_radial_trig_scalar_derivatives_match_finite_differences():
    mu = RadialTrigScalar(amplitude=0.3, power=1.5, mode=2, phase=0.4)
    r, th = 0.37, 1.1
    h = 1e-6
    dt_fd = (mu.value(r * np.exp(h), th) - mu.value(r * np.exp(-h), th)) / (2 * h)
    dth_fd = (mu.value(r, th + h) - mu.value(r, th - h)) / (2 * h)
    assert mu.dt(r, th) == pytest.approx(dt_fd, rel=1e-8)
    assert mu.dtheta(r, th) == pytest.approx(dth_fd, rel=1e-8)
    dtt_fd = (mu.dt(r * np.exp(h), th) - mu.dt(r * np.exp(-h), th)) / (2 * h)
    assert mu.dtt(r, th) == pytest.approx(dtt_fd, rel=1e-7)


def test_sum_scalar_adds_parts():
    a = RadialTrigScalar(amplitude=0.2, power=1.0, mode=1)
    b = RadialTrigScalar(amplitude=0.1, power=2.0, mode=0)
    s = SumScalar(parts=(a, b))
    assert s.value(0.5, 0.3) == pytest.approx(a.value(0.5, 0.3) + b.value(0.5, 0.3))
    assert s.dtheta(0.5, 0.3) == pytest.approx(a.dtheta(0.5, 0.3))


def test_radial_trig_mu_constructor():
    mu = radial_trig_mu(0.05, 1.0, mode=3, phase=0.1)
    assert isinstance(mu, RadialTrigScalar)
    assert mu.mode == 3


# ---------------------------------------------------------------------------
# curvature


def test_curvature_radial_quadratic_closed_form():
    # rho = e^{2 mu} |u|^{2(alpha-1)}, mu = s r^2: away from the tip
    # K = -(flat Laplacian of mu) / rho = -4 s e^{-2 s r^2} r^{-2(alpha-1)}
    grid = BGrid(t_min=-4.0, n_t=97, n_theta=16)
    i = grid.nearest_row(0.5)
    r = grid.r[i]
    for sign in (+1.0, -1.0):
        mu = RadialTrigScalar(amplitude=sign, power=2.0)
        metric = ConicMetric(alpha=0.5, mu=mu, nu=1.5)
        K = gauss_curvature(metric, grid)
        expected = -4.0 * sign * np.exp(-2.0 * sign * r**2) * r ** (1.0)
        assert K[i, 0] == pytest.approx(expected, rel=1e-12)


def test_curvature_round_cone_is_flat_off_tip():
    grid = BGrid(t_min=-4.0, n_t=49, n_theta=16)
    K = gauss_curvature(round_cone_metric(0.3), grid)
    assert np.max(np.abs(K)) == 0.0


def test_curvature_sampled_matches_analytic():
    grid = BGrid(t_min=-4.0, n_t=97, n_theta=32)
    mu = RadialTrigScalar(amplitude=0.2, power=1.5, mode=2, phase=0.3)
    metric = ConicMetric(alpha=0.4, mu=mu, nu=1.25)
    K_analytic = gauss_curvature(metric, grid)
    mu_samples = mu.value(grid.rmesh, grid.thmesh)
    K_sampled = gauss_curvature(metric, grid, mu_samples=mu_samples)
    inner = grid.interior_rows()
    scale = np.max(np.abs(K_analytic[inner]))
    gap = np.max(np.abs((K_analytic - K_sampled)[inner]))
    assert gap < 1e-5 * scale


def test_curvature_rejects_unresolved_samples():
    grid = BGrid(t_min=-4.0, n_t=49, n_theta=16)
    mu = RadialTrigScalar(amplitude=0.2, power=1.5)
    metric = ConicMetric(alpha=0.4, mu=mu, nu=1.25)
    rng = np.random.default_rng(1)
    noisy = mu.value(grid.rmesh, grid.thmesh) + 0.01 * rng.standard_normal(grid.shape)
    with pytest.raises(InsufficientRegularity):
        gauss_curvature(metric, grid, mu_samples=noisy)


def test_brioschi_flat_metric():
    # E = G = r^2, F = 0 is the flat metric in (t, theta); K = 0
    grid = BGrid(t_min=-3.0, n_t=49, n_theta=16)
    E = grid.rmesh**2
    K = brioschi_curvature(E, np.zeros(grid.shape), E.copy(), grid)
    assert np.max(np.abs(K[grid.interior_rows()])) < 1e-9


def test_brioschi_round_sphere():
    # pullback of the unit sphere under stereographic-type conformal factor:
    # conformal metric f |dz|^2 with f = 4 / (1 + r^2)^2 has K = +1
    grid = BGrid(t_min=-3.0, n_t=97, n_theta=16)
    f = 4.0 / (1.0 + grid.rmesh**2) ** 2
    E = f * grid.rmesh**2
    K = brioschi_curvature(E, np.zeros(grid.shape), E.copy(), grid)
    inner = grid.interior_rows()
    assert np.max(np.abs(K[inner] - 1.0)) < 1e-6


# ---------------------------------------------------------------------------
# finite-difference machinery


def test_fornberg_reproduces_standard_five_point_weights():
    x = np.arange(-2.0, 3.0)
    w2 = fornberg_weights(0.0, x, 2)
    assert np.allclose(w2, [-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12], atol=1e-13)
    w1 = fornberg_weights(0.0, x, 1)
    assert np.allclose(w1, [1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12], atol=1e-13)


def test_fornberg_scales_with_step():
    h = 0.37
    w = fornberg_weights(0.0, h * np.arange(-2.0, 3.0), 2)
    base = np.array([-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12]) / h**2
    assert np.allclose(w, base, rtol=1e-12)


# ---------------------------------------------------------------------------
# BGrid


def test_grid_nodes_and_spacing():
    grid = BGrid(t_min=-6.0, n_t=25, n_theta=16)
    assert grid.t[0] == -6.0 and grid.t[-1] == 0.0
    assert grid.h_t == pytest.approx(0.25)
    assert grid.h_theta == pytest.approx(np.pi / 8.0)
    assert grid.shape == (25, 16)
    assert np.allclose(grid.z, grid.rmesh * np.exp(1j * grid.thmesh))
    assert grid.nearest_row(1.0) == 24
    assert grid.interior_rows() == slice(2, 23)


def test_grid_validation():
    with pytest.raises(ValueError):
        BGrid(t_min=0.0, n_t=16, n_theta=16)
    with pytest.raises(ValueError):
        BGrid(t_min=-2.0, n_t=4, n_theta=16)
    with pytest.raises(ValueError):
        BGrid(t_min=-2.0, n_t=16, n_theta=16, r_outer=-1.0)


def test_grid_derivatives_exact_on_projected_polynomials():
    grid = BGrid(t_min=-2.0, n_t=33, n_theta=16)
    t = grid.tmesh
    f = t**4 - 2.0 * t**2 + 0.5 * t
    df = 4.0 * t**3 - 4.0 * t + 0.5
    assert np.max(np.abs(grid.d_t(f) - df)) < 1e-10
    assert np.max(np.abs(grid.d_t(f, 2) - (12.0 * t**2 - 4.0))) < 1e-9
    g = np.cos(3.0 * grid.thmesh) + np.sin(grid.thmesh)
    dg = -3.0 * np.sin(3.0 * grid.thmesh) + np.cos(grid.thmesh)
    assert np.max(np.abs(grid.d_theta(g) - dg)) < 1e-12


def test_grid_laplacian_b_closed_form():
    grid = BGrid(t_min=-2.0, n_t=33, n_theta=16)
    f = grid.tmesh**2 + np.cos(2.0 * grid.thmesh)
    expected = 2.0 - 4.0 * np.cos(2.0 * grid.thmesh)
    assert np.max(np.abs(grid.laplacian_b(f) - expected)) < 1e-9


def test_grid_integration_exact_on_cubic_times_trig():
    grid = BGrid(t_min=-2.0, n_t=33, n_theta=16)
    f = grid.tmesh**3 * np.cos(grid.thmesh) ** 2
    # int t^3 dt over [-2, 0] = -4; int cos^2 = pi
    assert grid.integrate(f) == pytest.approx(-4.0 * np.pi, rel=1e-13)


def test_grid_integration_row_window():
    grid = BGrid(t_min=-2.0, n_t=33, n_theta=16)
    ones = np.ones(grid.shape)
    i0, i1 = 4, 12
    expected = (grid.t[i1] - grid.t[i0]) * 2.0 * np.pi
    assert grid.integrate(ones, rows=(i0, i1)) == pytest.approx(expected, rel=1e-13)


def test_row_window_covers_radius_interval():
    grid = BGrid(t_min=-4.0, n_t=33, n_theta=16)
    i0, i1 = row_window(grid, 0.1, 0.5)
    assert grid.r[i0] >= 0.1 and grid.r[i1] <= 0.5
    assert i0 > 0 and grid.r[i0 - 1] < 0.1
    with pytest.raises(ValueError):
        row_window(grid, 1e-9, 2e-9)


def test_grid_theta_matrix_matches_fft_route():
    grid = BGrid(t_min=-2.0, n_t=9, n_theta=16)
    rng = np.random.default_rng(2)
    f = rng.standard_normal(16)
    assert np.allclose(grid.theta_diff_matrix(1) @ f, grid.d_theta(f), atol=1e-12)


# ---------------------------------------------------------------------------
# weighted b-norms


def test_weighted_norm_exact_on_matching_monomial():
    grid = BGrid(t_min=-6.0, n_t=49, n_theta=16)
    c = 1.3
    f = grid.rmesh**c
    spec = WeightedNormSpec(weight_c=c, order_k=0)
    assert weighted_b_norm(f, grid, spec) == pytest.approx(1.0, abs=1e-12)


def test_weighted_norm_first_order_monomial():
    grid = BGrid(t_min=-6.0, n_t=193, n_theta=16)
    c = 1.3
    f = grid.rmesh**c
    spec = WeightedNormSpec(weight_c=c, order_k=1)
    # d_t r^c = c r^c, d_theta = 0: norm = 1 + c up to stencil error
    assert weighted_b_norm(f, grid, spec) == pytest.approx(1.0 + c, rel=1e-6)


def test_weighted_norm_r_outer_scaling_exact():
    grid = BGrid(t_min=-6.0, n_t=49, n_theta=16)
    half = BGrid(t_min=-6.0, n_t=49, n_theta=16, r_outer=0.5)
    rng = np.random.default_rng(3)
    f = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    for c in (0.5, 1.5):
        spec = WeightedNormSpec(weight_c=c, order_k=1)
        ratio = weighted_b_norm(f, half, spec) / weighted_b_norm(f, grid, spec)
        assert ratio == pytest.approx(0.5 ** (-c), rel=1e-12)


def test_weighted_norm_spec_validation():
    with pytest.raises(ValueError):
        WeightedNormSpec(weight_c=1.0, order_k=3)
    with pytest.raises(ValueError):
        WeightedNormSpec(weight_c=1.0, order_k=1, holder_gamma=1.2)


def test_weighted_norm_holder_part_extends_base_norm():
    grid = BGrid(t_min=-4.0, n_t=49, n_theta=16)
    f = grid.rmesh * np.exp(1j * grid.thmesh)
    base = WeightedNormSpec(weight_c=1.0, order_k=1)
    held = WeightedNormSpec(weight_c=1.0, order_k=1, holder_gamma=0.5)
    n0 = weighted_b_norm(f, grid, base)
    n1 = weighted_b_norm(f, grid, held)
    assert np.isfinite(n1) and n1 >= n0


_fields = st.integers(min_value=0, max_value=2**32 - 1)


@settings(max_examples=25, deadline=None)
@given(seed=_fields, lam=st.floats(min_value=-3.0, max_value=3.0,
                                   allow_nan=False, allow_infinity=False))
def test_weighted_norm_homogeneous(seed, lam):
    grid = BGrid(t_min=-3.0, n_t=17, n_theta=8)
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    spec = WeightedNormSpec(weight_c=1.0, order_k=1)
    assert weighted_b_norm(lam * f, grid, spec) == pytest.approx(
        abs(lam) * weighted_b_norm(f, grid, spec), rel=1e-10, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=_fields)
def test_weighted_norm_triangle_inequality(seed):
    grid = BGrid(t_min=-3.0, n_t=17, n_theta=8)
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    g = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    spec = WeightedNormSpec(weight_c=0.5, order_k=2)
    n_sum = weighted_b_norm(f + g, grid, spec)
    n_f = weighted_b_norm(f, grid, spec)
    n_g = weighted_b_norm(g, grid, spec)
    assert n_sum <= n_f + n_g + 1e-10 * (n_f + n_g)
