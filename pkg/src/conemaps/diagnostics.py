"""Verifiers for the a priori structure of energy-minimizing maps:
subsolution and Harnack checks, normal-form fitting, rescaling probes, and
the classification check for entire bounded-density maps.

Everything here generates reports and never mutates its inputs; failed
hypotheses raise only where a check would otherwise be vacuous.
"""

import numpy as np
from dataclasses import dataclass, replace as dc_replace

import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .cone_spectral import _relative_arg
from .errors import FormViolation, HypothesisFail, PoorFit, WindowExceeded
from .field_ops import MapField, energy_density, h_l_jacobian, tension
from .geometry import (AngleClass, BGrid, WeightedNormSpec, round_cone_metric,
                       weighted_b_norm)
from .linearization import asymptotic_fit, fit_profile_constant


# ---------------------------------------------------------------------------
# subsolution check


@dataclass
class SubsolutionReport:
    pointwise_min: float
    weak_values: tuple
    weak_max: float
    tol: float
    passed_pointwise: bool
    passed_weak: bool
    passed: bool


def subsolution_check(e_field, grid, tol=1e-10, n_weak=10, seed=0):
    """Check that a real field is a (flat) subsolution: lap_b e >= -tol.

    Pointwise check on interior rows plus the weak form against n_weak
    random nonnegative test functions zeta vanishing at both grid edges:
    int (e_t zeta_t + e_theta zeta_theta) dt dtheta <= tol * scale, which is
    the flat-disc pairing written in log-polar coordinates. Report-only.
    """
    e_field = np.asarray(e_field, dtype=float)
    inner = grid.interior_rows()
    lap = grid.laplacian_b(e_field)
    pointwise_min = float(np.min(lap[inner]))
    # floor the scale at sup|e| so a constant field passes despite roundoff
    scale = max(float(np.max(np.abs(lap))), float(np.max(np.abs(e_field))), 1e-30)

    et = grid.d_t(e_field)
    eth = grid.d_theta(e_field)
    grad_e = float(np.sqrt(grid.integrate(et**2 + eth**2)))
    rng = np.random.default_rng(seed)
    bump = np.sin(np.pi * (grid.tmesh - grid.t_min) / abs(grid.t_min)) ** 2
    weak = []
    for _ in range(n_weak):
        poly = np.zeros(grid.shape, dtype=complex)
        for m in range(4):
            c = rng.standard_normal() + 1j * rng.standard_normal()
            poly += c * np.exp(1j * m * grid.thmesh)
        zeta = bump * np.abs(poly) ** 2
        val = grid.integrate(et * grid.d_t(zeta) + eth * grid.d_theta(zeta))
        grad_zeta = np.sqrt(
            grid.integrate(grid.d_t(zeta) ** 2 + grid.d_theta(zeta) ** 2))
        weak.append(float(val / ((1.0 + grad_e) * max(grad_zeta, 1e-30))))
    weak_max = float(np.max(weak))
    passed_pointwise = pointwise_min >= -tol * scale
    passed_weak = weak_max <= tol
    return SubsolutionReport(
        pointwise_min=pointwise_min,
        weak_values=tuple(weak),
        weak_max=weak_max,
        tol=tol,
        passed_pointwise=passed_pointwise,
        passed_weak=passed_weak,
        passed=passed_pointwise and passed_weak,
    )


# ---------------------------------------------------------------------------
# Harnack lower bound


def generate_supersolution(grid, alpha, sigma, boundary):
    """Solve (lap_b - sigma r^{2 alpha}) f = 0 with Dirichlet outer data.

    This is the b-form of the cone operator (Delta - sigma) f = 0. The
    theta-modes decouple, so each is solved as a 1-D system with the inner
    closure matched to its own bounded branch (rate |j|); a single shared
    closure would reflect a spurious growing branch into the deep rows.
    Positive boundary data produces the admissible inputs of the Harnack
    check.
    """
    n_t, n_th = grid.shape
    weight = sigma * grid.r ** (2.0 * alpha)
    bhat = np.fft.fft(np.asarray(boundary, dtype=float)) / n_th
    prof = np.zeros((n_t, n_th), dtype=complex)
    dtt = grid.diff_t_matrix(2)
    for m in range(n_th):
        j = m if m <= n_th // 2 else m - n_th
        A = (dtt - sp.diags(j**2 + weight)).tolil()
        A.rows[0] = [0, 1]
        A.data[0] = [1.0, -float(np.exp(-abs(j) * grid.h_t))]
        A.rows[n_t - 1] = [n_t - 1]
        A.data[n_t - 1] = [1.0]
        rhs = np.zeros(n_t, dtype=complex)
        rhs[n_t - 1] = bhat[m]
        prof[:, m] = spsolve(A.tocsr(), rhs)
    f = np.fft.ifft(prof * n_th, axis=1).real
    return f


@dataclass
class HarnackReport:
    a: float
    b_min: float
    epsilon_rate: float
    sigma: float
    constant: float
    boundary_mean: float
    lhs: float
    rhs: float
    slack: float
    passed: bool


def harnack_check(f, grid, alpha, sigma, epsilon_rate=None, tol_super=1e-6,
                  goodness=0.99, tol=1e-5):
    """Verify the quantified Harnack lower bound for cone supersolutions.

    For f > 0 with (Delta - sigma) f <= 0 on the cone of angle 2 pi alpha
    (b-form: lap_b f <= sigma r^{2 alpha} f) and inner decomposition
    f = a + b(theta) + O(r^eps) with sigma < eps^2, the limit data dominates
    the boundary average:

        a + min b >= exp(-sigma / (4 alpha^2)) * mean(f at r = 1).

    sigma may be the string "auto", which calibrates it to the smallest
    value making f a supersolution (useful for fields that satisfy a
    curvature-controlled differential inequality rather than an exact one).

    Raises:
        HypothesisFail: f is not positive, not a supersolution at the stated
            sigma, the remainder does not exhibit a clean decay rate, or the
            rate fails sigma < eps^2. The message names the failed
            hypothesis.
    """
    f = np.asarray(f, dtype=float)
    alpha = float(alpha)
    if np.min(f) <= 0.0:
        raise HypothesisFail(
            f"positivity: min f = {np.min(f):.3e} is not positive")

    weight = grid.rmesh ** (2.0 * alpha)
    lap = grid.laplacian_b(f)
    inner = grid.interior_rows()
    if sigma == "auto":
        sigma = float(np.max((lap[inner] / (weight[inner] * f[inner])).clip(min=0.0)))
    sigma = float(sigma)
    violation = lap[inner] - sigma * weight[inner] * f[inner]
    scale = max(float(np.max(np.abs(lap))), sigma * float(np.max(weight * f)),
                float(np.max(f)), 1e-30)
    if float(np.max(violation)) > tol_super * scale:
        raise HypothesisFail(
            "supersolution: (Delta - sigma) f > 0 at interior nodes "
            f"(worst normalized excess {np.max(violation) / scale:.3e})"
        )

    # limits a and b(theta): per-mode profiled constants, so undecayed
    # remainder cannot leak into the inner data; inner-half rows only, away
    # from the boundary where closure-reflected branches are largest
    n_t, n_th = grid.shape
    modes = np.fft.fft(f, axis=1) / n_th
    i0, i1 = 0, n_t - 1
    f_scale = float(np.max(np.abs(f)))
    limits = np.zeros(n_th, dtype=complex)
    for m in range(n_th):
        if float(np.max(np.abs(modes[:, m]))) < 1e-13 * f_scale:
            continue
        c, _, _ = fit_profile_constant(modes[i0 : i1 + 1, m], grid.t[i0 : i1 + 1])
        limits[m] = c
    a = float(limits[0].real)
    b = (np.fft.ifft(limits * n_th).real - a)[: n_th]
    remainder = f - a - b[None, :]
    rem_scale = float(np.max(np.abs(remainder)))
    if rem_scale < 1e-12 * max(f_scale, 1.0):
        eps_fit = np.inf
    else:
        try:
            fit = asymptotic_fit(remainder.astype(complex), grid,
                                 goodness_threshold=goodness)
        except PoorFit as exc:
            raise HypothesisFail(
                f"decomposition: remainder decay rate did not fit ({exc})"
            ) from exc
        eps_fit = fit.exponent
    if epsilon_rate is not None:
        eps_fit = min(eps_fit, float(epsilon_rate))
    if sigma >= eps_fit**2:
        raise HypothesisFail(
            f"rate: sigma = {sigma:.3e} is not below eps^2 = {eps_fit**2:.3e}")

    boundary_mean = float(np.mean(f[-1]))
    constant = float(np.exp(-sigma / (4.0 * alpha**2)))
    lhs = a + float(np.min(b))
    rhs = constant * boundary_mean
    slack = lhs - rhs
    passed = slack >= -tol * max(1.0, abs(rhs))
    return HarnackReport(
        a=a,
        b_min=float(np.min(b)),
        epsilon_rate=float(eps_fit),
        sigma=sigma,
        constant=constant,
        boundary_mean=boundary_mean,
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        passed=passed,
    )


# ---------------------------------------------------------------------------
# normal-form fitting


@dataclass
class Form1Fit:
    """u = lam z + v with v = O(r^{1+epsilon}); v_norm is the weighted
    b-norm of the remainder at weight 1 + epsilon."""

    lam: complex
    epsilon: float
    v_norm: float
    goodness: float
    window_rows: tuple


@dataclass
class Form2Fit:
    """Double-cover fit w = a z~ + b conj(z~) + v at cone angle pi."""

    a: complex
    b: complex
    v_sup: float
    orientation_ok: bool
    window_rows: tuple


def _decade_rows(grid, min_rows=10):
    """Rows of the innermost radial decade (at least min_rows of them)."""
    i1 = int(np.searchsorted(grid.t, grid.t_min + np.log(10.0)))
    i1 = max(i1, min_rows - 1)
    if i1 >= grid.n_t:
        raise WindowExceeded(
            f"grid too shallow for an inner-decade fit with {min_rows} rows")
    return 0, i1


def form_fit(u, floor=0.01, holder_gamma=0.5, resolution=1e-5):
    """Fit the near-cone normal form of a map.

    Away from cone angle pi this is u = lam z + v: lam by least squares over
    the innermost radial decade, the remainder exponent 1 + epsilon by the
    per-mode decay fit, and v_norm the weighted b-norm of v at weight
    1 + epsilon. At cone angle exactly pi the map is lifted through the
    double cover and fitted as w = a z~ + b conj(z~) + v instead.

    A remainder that fails the decay fit while sitting below
    resolution * sup|u| on the fit window is stencil-level error with no
    structure to resolve (converged solves leave such noise); those maps
    are reported as exact matches with epsilon = inf.

    Returns:
        Form1Fit, or Form2Fit when the target angle is pi.

    Raises:
        FormViolation: fitted remainder exponent at or below 1 + floor (the
            remainder would compete with the linear term), or a degenerate
            linear coefficient.
    """
    grid = u.grid
    i0, i1 = _decade_rows(grid)
    z = np.array(grid.z[i0 : i1 + 1])
    w = u.samples[i0 : i1 + 1]

    if u.target.alpha.classification is AngleClass.EQUAL_PI:
        zt = np.sqrt(grid.rmesh) * np.exp(0.5j * grid.thmesh)
        arg = _relative_arg(u.samples, grid.thmesh)
        lift = np.sqrt(np.abs(u.samples)) * np.exp(0.5j * arg)
        design = np.column_stack(
            [zt[i0 : i1 + 1].ravel(), np.conj(zt[i0 : i1 + 1]).ravel()])
        sol, *_ = np.linalg.lstsq(design, lift[i0 : i1 + 1].ravel(), rcond=None)
        a, b = complex(sol[0]), complex(sol[1])
        if abs(a) < 1e-12:
            raise FormViolation("degenerate lift: leading coefficient a ~ 0")
        v = lift - a * zt - b * np.conj(zt)
        return Form2Fit(a=a, b=b, v_sup=float(np.max(np.abs(v))),
                        orientation_ok=abs(a) > abs(b), window_rows=(i0, i1))

    lam = complex(np.sum(np.conj(z) * w) / np.sum(np.abs(z) ** 2))
    if abs(lam) < 1e-12 * float(np.max(np.abs(w)) / np.max(np.abs(z))):
        raise FormViolation("degenerate linear coefficient lam ~ 0")
    v = u.samples - lam * grid.z
    sup_u = float(np.max(np.abs(u.samples)))
    exact = Form1Fit(lam=lam, epsilon=np.inf, v_norm=0.0, goodness=1.0,
                     window_rows=(i0, i1))
    if float(np.max(np.abs(v))) < 1e-13 * sup_u:
        return exact
    try:
        fit = asymptotic_fit(v, grid, window=(i0, i1))
    except PoorFit:
        if float(np.max(np.abs(v[i0:i1 + 1]))) < resolution * sup_u:
            return exact
        raise
    eps = fit.exponent - 1.0
    if eps <= floor:
        raise FormViolation(
            f"remainder exponent {fit.exponent:.3f} not above 1 + {floor}",
            payload=fit,
        )
    spec = WeightedNormSpec(weight_c=1.0 + eps, order_k=2,
                            holder_gamma=holder_gamma)
    v_norm = weighted_b_norm(v, grid, spec)
    return Form1Fit(lam=lam, epsilon=float(eps), v_norm=float(v_norm),
                    goodness=fit.goodness, window_rows=(i0, i1))


# ---------------------------------------------------------------------------
# rescaling probe


@dataclass
class RescaleReport:
    sigma: float
    tau: float
    norm_before: float
    norm_after: float
    expected_ratio: float
    actual_ratio: float
    lam_before: complex
    lam_after: complex


def rescale_probe(u, sigma, tau, norm_spec=None):
    """Build (1/sigma) u(tau z) on the induced grid and audit norm scaling.

    The induced grid keeps the same log-radial nodes with outer radius
    r_outer / tau, so the sample array transports unchanged (up to the
    1/sigma factor) and the probe is exact: no interpolation enters. The
    weighted b-norm then scales by exactly tau^c / sigma, which the report
    verifies.

    Raises:
        WindowExceeded: tau or sigma is not a positive finite scale.
    """
    if not (np.isfinite(tau) and tau > 0.0) or not (np.isfinite(sigma) and sigma > 0.0):
        raise WindowExceeded(f"invalid rescaling (sigma={sigma}, tau={tau})")
    grid = u.grid
    new_grid = BGrid(t_min=grid.t_min, n_t=grid.n_t, n_theta=grid.n_theta,
                     r_outer=grid.r_outer / tau)
    if norm_spec is None:
        norm_spec = WeightedNormSpec(weight_c=1.0, order_k=1)
    norm_before = weighted_b_norm(u.samples, grid, norm_spec)
    new_samples = u.samples / sigma
    norm_after = weighted_b_norm(new_samples, new_grid, norm_spec)
    rescaled = MapField(grid=new_grid, samples=new_samples, target=u.target,
                        domain=u.domain)
    lam_before = 0j
    lam_after = 0j
    if u.form_fit is not None:
        lam_before = u.form_fit.lam
        lam_after = lam_before * tau / sigma
        rescaled = dc_replace(rescaled,
                              form_fit=dc_replace(u.form_fit, lam=lam_after))
    return rescaled, RescaleReport(
        sigma=float(sigma),
        tau=float(tau),
        norm_before=float(norm_before),
        norm_after=float(norm_after),
        expected_ratio=float(tau**norm_spec.weight_c / sigma),
        actual_ratio=float(norm_after / norm_before),
        lam_before=lam_before,
        lam_after=lam_after,
    )


# ---------------------------------------------------------------------------
# classification of entire bounded-density maps


@dataclass
class ClassificationReport:
    tension_sup: float
    harmonic: bool
    sup_e: float
    sup_l: float
    bounded_density: bool
    lam: complex
    verdict: float
    tolerance: float
    passed: bool


def cone_classification_check(u, tolerance=0.05, tol_harmonic=1e-5):
    """Measure how far a cone-to-cone map is from a dilation-rotation.

    A harmonic map between equal-angle cones with bounded energy density
    must be lam z; the verdict sup|u - lam z| / sup|u| quantifies the
    distance on the sampled annulus (a finite window of the entire-map
    statement, so small nonzero verdicts are expected). The report also
    carries the precondition data: normalized tension, the density bound,
    and sup of the anti-conformal energy l (zero exactly for holomorphic
    maps). Report-only: failed preconditions are flagged, never raised.

    When u.domain is unset the density is computed against the round cone
    of the target angle, which is the geometry of the statement.
    """
    work = u
    if u.domain is None:
        work = dc_replace(u, domain=round_cone_metric(u.target.alpha))
    ten = tension(work, use_analytic=False)
    harmonic = ten.sup_normalized < tol_harmonic
    e = energy_density(work, use_analytic=False)
    _, l, _ = h_l_jacobian(work, use_analytic=False)
    outer_half = e[work.grid.n_t // 2 :]
    bounded = float(np.max(e[:3])) <= 10.0 * max(float(np.max(outer_half)), 1e-30)
    i0, i1 = _decade_rows(work.grid)
    z = np.array(work.grid.z[i0 : i1 + 1])
    lam = complex(np.sum(np.conj(z) * work.samples[i0 : i1 + 1])
                  / np.sum(np.abs(z) ** 2))
    verdict = float(np.max(np.abs(work.samples - lam * work.grid.z))
                    / max(np.max(np.abs(work.samples)), 1e-30))
    return ClassificationReport(
        tension_sup=ten.sup_normalized,
        harmonic=harmonic,
        sup_e=float(np.max(e)),
        sup_l=float(np.max(l)),
        bounded_density=bounded,
        lam=lam,
        verdict=verdict,
        tolerance=tolerance,
        passed=harmonic and bounded and verdict < tolerance,
    )
