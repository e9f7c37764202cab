"""Pointwise field operations on maps between cones.

A map u from the punctured disc (possibly carrying a conic metric sigma) to a
cone (metric rho) is stored as samples on a BGrid. Everything here is local:
energy density, tension, Hopf differential, contour residues, Jacobian sign,
the Bochner-type reports, and the pullback-metric split.

Derivative policy: a MapField may carry analytic Wirtinger derivative samples
(u_z, u_zbar, u_zzbar), attached by the spectral synthesis factory. Ops use
them when present unless called with use_analytic=False, which forces the
grid stencils (that switch is what refinement studies measure). Contour
integration always works on pointwise samples and never reads series
coefficients, so residue cross-checks stay independent.
"""

import numpy as np
from dataclasses import dataclass, replace

from .errors import InconsistentResidue, NotHarmonic, SplitFails, TargetPunctureHit
from .geometry import BGrid, ConicMetric, brioschi_curvature


# ---------------------------------------------------------------------------
# map container


@dataclass
class MapField:
    """Map samples on a BGrid with target (and optional domain) metric.

    samples[i, k] = u(z_ik). Values must avoid the exact target cone point;
    the metric degenerates there. u_z / u_zbar / u_zzbar, when attached, are
    exact pointwise derivatives in the domain coordinate z.
    """

    grid: BGrid
    samples: np.ndarray
    target: ConicMetric
    domain: ConicMetric = None
    u_z: np.ndarray = None
    u_zbar: np.ndarray = None
    u_zzbar: np.ndarray = None
    form_fit: object = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.shape != self.grid.shape:
            raise ValueError("sample array does not match the grid shape")
        if np.any(self.samples == 0.0):
            raise TargetPunctureHit("map samples hit the target cone point")

    @property
    def has_analytic(self):
        return self.u_z is not None and self.u_zbar is not None

    def replace_samples(self, samples):
        """Same metadata, new samples, analytic derivatives dropped."""
        return replace(self, samples=np.asarray(samples, dtype=complex),
                       u_z=None, u_zbar=None, u_zzbar=None, form_fit=None)

    def boundary_values(self):
        return self.samples[-1].copy()


def identity_map(grid, target, domain=None):
    """The identity configuration; harmonic into every conic target."""
    z = np.array(grid.z)
    one = np.ones(grid.shape, dtype=complex)
    zero = np.zeros(grid.shape, dtype=complex)
    return MapField(grid=grid, samples=z, target=target, domain=domain,
                    u_z=one, u_zbar=zero, u_zzbar=zero)


def domain_sigma(u):
    """Domain conformal factor sigma on the grid (1 for the flat disc)."""
    if u.domain is None:
        return np.ones(u.grid.shape)
    return u.domain.rho(u.grid.z).real


# ---------------------------------------------------------------------------
# derivatives


def b_derivatives(u):
    """(u_t, u_theta) by grid stencils."""
    return u.grid.d_t(u.samples), u.grid.d_theta(u.samples)


def wirtinger(u, use_analytic=True):
    """(u_z, u_zbar), analytic samples if carried, else from stencils."""
    if use_analytic and u.has_analytic:
        return u.u_z, u.u_zbar
    ut, uth = b_derivatives(u)
    z = u.grid.z
    u_z = (ut - 1j * uth) / (2.0 * z)
    u_zbar = (ut + 1j * uth) / (2.0 * np.conj(z))
    return u_z, u_zbar


# ---------------------------------------------------------------------------
# energy


def energy_density(u, use_analytic=True):
    """e(u) = rho(u)/sigma (|u_z|^2 + |u_zbar|^2), real field."""
    u_z, u_zbar = wirtinger(u, use_analytic)
    rho = u.target.rho(u.samples)
    return (rho * (np.abs(u_z) ** 2 + np.abs(u_zbar) ** 2) / domain_sigma(u)).real


def conformal_energy_coefficient(u, use_analytic=True):
    """e*sigma = rho(u)(|u_z|^2+|u_zbar|^2); the |dz|^2 part of the pullback.

    Domain-metric independent (the pullback does not see sigma).
    """
    u_z, u_zbar = wirtinger(u, use_analytic)
    rho = u.target.rho(u.samples)
    return (rho * (np.abs(u_z) ** 2 + np.abs(u_zbar) ** 2)).real


def total_energy(u, rows=None, use_analytic=True):
    """E = 1/2 int rho(u)(|u_z|^2+|u_zbar|^2) dA over the grid annulus.

    dA = r^2 dt dtheta in log-polar coordinates; `rows` restricts to a radial
    window (inclusive index pair). Conformally invariant in the domain, so
    sigma never enters.
    """
    integrand = conformal_energy_coefficient(u, use_analytic) * u.grid.rmesh**2
    return 0.5 * u.grid.integrate(integrand, rows=rows)


# ---------------------------------------------------------------------------
# tension


@dataclass
class TensionResult:
    """tau is the raw tension field; normalized = |z|^2 (sigma/4) tau stays
    bounded down to the puncture and is the residual all solvers report."""

    tau: np.ndarray
    normalized: np.ndarray
    sup_normalized: float


def tension(u, use_analytic=True):
    """Tension of u against its target metric.

    tau(u) = (4/sigma)(u_zzbar + Gamma(u) u_z u_zbar) with
    Gamma = d log rho / du. The normalized residual multiplies by
    |z|^2 sigma / 4, which removes both the domain factor and the r^-2
    blowup; it vanishes identically iff u is harmonic.
    """
    gamma = u.target.dlog_rho_du(u.samples)
    if use_analytic and u.has_analytic and u.u_zzbar is not None:
        core = u.u_zzbar + gamma * u.u_z * u.u_zbar
        normalized = np.abs(u.grid.z) ** 2 * core
    else:
        ut, uth = b_derivatives(u)
        lap = u.grid.laplacian_b(u.samples)
        # 4|z|^2 u_z u_zbar = (u_t - i u_th)(u_t + i u_th)
        normalized = 0.25 * (lap + gamma * (ut - 1j * uth) * (ut + 1j * uth))
    sigma = domain_sigma(u)
    tau = 4.0 * normalized / (sigma * np.abs(u.grid.z) ** 2)
    inner = u.grid.interior_rows()
    sup = float(np.max(np.abs(normalized[inner])))
    return TensionResult(tau=tau, normalized=normalized, sup_normalized=sup)


# ---------------------------------------------------------------------------
# Hopf differential


@dataclass
class HopfField:
    """phi dz^2 with its origin residue and decay diagnostics.

    residue_at_origin is the average of contour values over at least three
    grid radii; per_radius records (radius, value) pairs, and
    residue_deviation the worst distance from the average. dbar_residual is
    sup |dbar phi| r^(2 - 2 alpha - eps_report) over interior nodes: zero in
    exact arithmetic for harmonic u, and its grid decay under refinement is a
    solver-quality diagnostic.
    """

    grid: BGrid
    phi: np.ndarray
    residue_at_origin: complex
    residue_deviation: float
    per_radius: tuple
    dbar_residual: float
    eps_report: float


def _contour_values(phi, grid, rows):
    """(1/2 pi i) contour integral of phi dz at the given grid rows.

    Periodic trapezoid rule: exact for trigonometric polynomials in theta,
    i.e. for any truncated twisted series.
    """
    vals = []
    for i in rows:
        vals.append((float(grid.r[i]), complex(np.mean(phi[i] * grid.z[i]))))
    return vals


def _default_residue_rows(grid):
    n = grid.n_t
    return [n // 4, n // 2, (3 * n) // 4]


def contour_residue(phi, grid=None, radii=None, tol=1e-8):
    """Origin residue of phi dz^2 by contour integration over grid circles.

    Args:
        phi: HopfField or raw (n_t, n_theta) samples (then grid is required).
        grid: BGrid when phi is a raw array.
        radii: target radii; each is snapped to the nearest grid row. Default
            is three rows at the quarter points of the log-radius range.
        tol: radius-consistency budget; disagreement beyond 10*tol (relative
            to the value scale) raises InconsistentResidue.

    Returns:
        (value, deviation, per_radius) with per_radius a tuple of
        (radius, contour value) pairs.
    """
    if isinstance(phi, HopfField):
        grid = phi.grid
        phi = phi.phi
    phi = np.asarray(phi)
    if radii is None:
        rows = _default_residue_rows(grid)
    else:
        rows = [grid.nearest_row(r0) for r0 in np.atleast_1d(radii)]
    per_radius = _contour_values(phi, grid, rows)
    values = np.array([v for (_, v) in per_radius])
    value = complex(values.mean())
    deviation = float(np.max(np.abs(values - value))) if len(values) > 1 else 0.0
    scale = max(1.0, abs(value))
    if deviation > 10.0 * tol * scale:
        raise InconsistentResidue(
            f"contour residues drift across radii by {deviation:.3e} "
            f"(tolerance {10.0 * tol * scale:.3e}); phi is not meromorphic-like "
            "on this window",
            payload=per_radius,
        )
    return value, deviation, tuple(per_radius)


def hopf(u, radii=None, eps_report=None, use_analytic=True, tol=1e-8):
    """Hopf differential phi = rho(u) u_z conj(u_zbar) with diagnostics."""
    u_z, u_zbar = wirtinger(u, use_analytic)
    rho = u.target.rho(u.samples)
    phi = rho * u_z * np.conj(u_zbar)
    value, deviation, per_radius = contour_residue(phi, u.grid, radii=radii, tol=tol)

    if eps_report is None:
        eps_report = u.form_fit.epsilon if u.form_fit is not None else 0.1
    grid = u.grid
    phi_t = grid.d_t(phi)
    phi_th = grid.d_theta(phi)
    dbar_phi = (phi_t + 1j * phi_th) / (2.0 * np.conj(grid.z))
    a = u.target.alpha.alpha
    weight = grid.rmesh ** (2.0 - 2.0 * a - eps_report)
    inner = grid.interior_rows()
    dbar_residual = float(np.max(np.abs(dbar_phi[inner] * weight[inner])))
    return HopfField(grid=grid, phi=phi, residue_at_origin=value,
                     residue_deviation=deviation, per_radius=per_radius,
                     dbar_residual=dbar_residual, eps_report=eps_report)


def hopf_path_derivative(u_plus, u_minus, delta, use_analytic=True, tol=1e-6):
    """Central difference (phi(u_plus) - phi(u_minus)) / (2 delta).

    The inputs are maps at path parameters +delta and -delta; the result is
    the linearized Hopf differential of the path at 0, packaged as a
    HopfField so the residue calculus applies to it directly.
    """

    def raw_phi(u):
        u_z, u_zbar = wirtinger(u, use_analytic)
        return u.target.rho(u.samples) * u_z * np.conj(u_zbar)

    dphi = (raw_phi(u_plus) - raw_phi(u_minus)) / (2.0 * delta)
    grid = u_plus.grid
    value, deviation, per_radius = contour_residue(dphi, grid, tol=tol)
    return HopfField(grid=grid, phi=dphi, residue_at_origin=value,
                     residue_deviation=deviation, per_radius=per_radius,
                     dbar_residual=float("nan"), eps_report=0.0)


def energy_gradient_residue(w, hopf_field):
    """dE/dt for the cone point moving with velocity w: Re 2 pi w Res.

    w is the velocity of the cone-point preimage in the fixed domain
    coordinate; the residue is the 1/z coefficient of phi in that same
    coordinate. The pairing is Re(w Res): for a conjugation-symmetric
    configuration (real series coefficients, hence real residue) the
    energy is stationary along the imaginary direction, as it must be.
    """
    return float(np.real(2.0 * np.pi * w * hopf_field.residue_at_origin))


def energy_hessian_residue(w, hopf_derivative):
    """d^2E/dt^2 from the linearized Hopf residue: Re 2 pi w Res(dphi)."""
    return float(np.real(2.0 * np.pi * w * hopf_derivative.residue_at_origin))


# ---------------------------------------------------------------------------
# holomorphic / antiholomorphic energies and Jacobian


def h_l_jacobian(u, use_analytic=True):
    """(h, l, h - l): partial energies and the Jacobian density.

    h = rho|u_z|^2/sigma, l = rho|u_zbar|^2/sigma; h - l is the Jacobian of u
    against the two metrics, positive where u is orientation preserving.
    """
    u_z, u_zbar = wirtinger(u, use_analytic)
    rho = u.target.rho(u.samples)
    sigma = domain_sigma(u)
    h = (rho * np.abs(u_z) ** 2 / sigma).real
    l = (rho * np.abs(u_zbar) ** 2 / sigma).real
    return h, l, h - l


# ---------------------------------------------------------------------------
# curvature-weighted comparison reports


@dataclass
class BochnerReport:
    """Pointwise check of the curvature identities for a harmonic map.

    inequality_min_slack: min over interior nodes of
        lap_b(e) - sigma r^2 (-2 kappa_rho (h - l) + 2 kappa_sigma e),
    nonnegative (to tolerance) for harmonic maps.
    identity_sup_residual: sup over admissible nodes (h > h_floor) of
        |lap_b(log h) - sigma r^2 (-2 kappa_rho (h - l) + kappa_sigma)|.
    """

    inequality_min_slack: float
    identity_sup_residual: float
    n_identity_nodes: int
    tension_sup: float


def bochner_check(u, h_floor=None, tol_harmonic=1e-6, use_analytic=True):
    """Verify the energy subsolution inequality and the log h identity.

    Raises NotHarmonic when the normalized tension residual exceeds
    tol_harmonic; both formulas assume a harmonic base map.
    """
    ten = tension(u, use_analytic=use_analytic)
    if ten.sup_normalized > tol_harmonic:
        raise NotHarmonic(
            f"normalized tension {ten.sup_normalized:.3e} exceeds "
            f"{tol_harmonic:.1e}; curvature identities need a harmonic map"
        )
    grid = u.grid
    h, l, jac = h_l_jacobian(u, use_analytic)
    e = energy_density(u, use_analytic)
    sigma = domain_sigma(u)
    kappa_rho = u.target.curvature(u.samples).real
    if u.domain is None:
        kappa_sigma = np.zeros(grid.shape)
    else:
        kappa_sigma = u.domain.curvature(grid.z).real
    scale = sigma * grid.rmesh**2

    inner = grid.interior_rows()
    slack = grid.laplacian_b(e) - scale * (-2.0 * kappa_rho * jac + 2.0 * kappa_sigma * e)
    inequality_min_slack = float(np.min(slack[inner]))

    if h_floor is None:
        h_floor = 1e-6 * float(np.max(h))
    admissible = h > h_floor
    log_h = np.where(admissible, np.log(np.where(admissible, h, 1.0)), 0.0)
    residual = grid.laplacian_b(log_h) - scale * (-2.0 * kappa_rho * (h - l) + kappa_sigma)
    # log h differentiation is only trusted where the whole stencil is admissible
    full = np.ones_like(admissible)
    for shift in (-2, -1, 1, 2):
        full &= np.roll(admissible, shift, axis=0)
        full &= np.roll(admissible, shift, axis=1)
    full &= admissible
    mask = full[inner]
    sup_res = float(np.max(np.abs(residual[inner][mask]))) if mask.any() else float("nan")
    return BochnerReport(
        inequality_min_slack=inequality_min_slack,
        identity_sup_residual=sup_res,
        n_identity_nodes=int(mask.sum()),
        tension_sup=ten.sup_normalized,
    )


# ---------------------------------------------------------------------------
# pullback split


@dataclass
class SplitReport:
    """u*G = H1 + H2 with H1 = (e sigma - s)|dz|^2 conformal and
    H2 = s|dz|^2 + 2 Re(phi dz^2), s = sqrt(eps^2 omega^2 + |phi|^2).

    Min-eigenvalue reports are per unit |dz|^2. h2_curvature_max is the
    largest interior Gauss curvature of H2 (expected negative)."""

    epsilon: float
    h1_min: float
    h2_min_eig: float
    h1_curvature_max: float
    h2_curvature_max: float
    s: np.ndarray
    h2_curvature: np.ndarray


def pullback_split(u, epsilon, omega=1.0, use_analytic=True):
    """Split the pullback metric of u and report positivity and curvature.

    Raises SplitFails when the conformal part fails to dominate (epsilon too
    large, or the map degenerate on the window).
    """
    grid = u.grid
    coeff = conformal_energy_coefficient(u, use_analytic)
    u_z, u_zbar = wirtinger(u, use_analytic)
    phi = u.target.rho(u.samples) * u_z * np.conj(u_zbar)
    abs_phi = np.abs(phi)
    if np.min(coeff - abs_phi) <= 0.0:
        raise SplitFails(
            "conformal energy does not dominate |phi|; the map is degenerate "
            "on this window"
        )
    s = np.sqrt((epsilon * np.asarray(omega)) ** 2 + abs_phi**2)
    h1 = coeff - s
    if np.min(h1) <= 0.0:
        raise SplitFails(
            f"H1 coefficient loses positivity (min {np.min(h1):.3e}); "
            "epsilon is too large for this map"
        )
    h2_min_eig = float(np.min(s - 2.0 * abs_phi))
    if h2_min_eig <= 0.0:
        raise SplitFails(
            f"H2 loses positivity (min eigenvalue {h2_min_eig:.3e}); "
            "epsilon is too small relative to |phi|"
        )

    inner = grid.interior_rows()
    # H2 in (t, theta) coordinates
    pz2 = phi * grid.z**2
    E = s * grid.rmesh**2 + 2.0 * np.real(pz2)
    G = s * grid.rmesh**2 - 2.0 * np.real(pz2)
    F = -2.0 * np.imag(pz2)
    h2_curv = brioschi_curvature(E, F, G, grid)
    h2_curvature_max = float(np.max(h2_curv[inner]))

    # H1 is conformal: kappa = -lap_b(log f) / (2 f r^2)
    log_h1 = np.log(h1)
    h1_curv = -grid.laplacian_b(log_h1) / (2.0 * h1 * grid.rmesh**2)
    h1_curvature_max = float(np.max(h1_curv[inner]))

    return SplitReport(
        epsilon=float(epsilon),
        h1_min=float(np.min(h1)),
        h2_min_eig=h2_min_eig,
        h1_curvature_max=h1_curvature_max,
        h2_curvature_max=h2_curvature_max,
        s=s,
        h2_curvature=h2_curv,
    )
