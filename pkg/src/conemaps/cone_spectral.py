"""Spectral solution of the cone Dirichlet problem on the flat model.

In the flattening chart the punctured disc becomes a sector of opening angle
2*pi*alpha whose two edges are identified by rotation ("twist"). Harmonic maps
into the round cone are, after the same flattening on the target, series in
the twisted basis e^{i(1 + j/alpha) theta_tilde}, j in Z:

    u_tilde(z_tilde) = sum_{j>=0} a_j z_tilde^(1 + j/alpha)
                     + sum_{j<0}  a_j conj(z_tilde)^(|j|/alpha - 1)

Conventions: inside this module the wedge variable is normalized so the
sector has radius 1 (z_tilde = z^alpha on both sides; the chart in
geometry.wedge_coordinates carries an extra 1/alpha that is absorbed here
into the overall constant). In the disc coordinate z the j-th terms read
a_j z^(alpha+j) and a_j zbar^(|j|-alpha): trigonometric polynomials in theta
on every circle, which is why contour quadrature below is exact.

All fractional powers are (r, theta) powers with theta in [0, 2*pi); complex
log is never taken.
"""

import numpy as np
from dataclasses import dataclass

from .errors import (
    Aliasing,
    FormViolation,
    NoConvergence,
    NonConeMapping,
    OutOfDisc,
    TwistViolation,
)
from .field_ops import HopfField, MapField, contour_residue
from .geometry import BGrid, ConeAngleSpec, round_cone_metric


# ---------------------------------------------------------------------------
# series container


@dataclass(frozen=True)
class TwistedSeries:
    """Truncated twisted series: coefficients a_j, |j| <= J, J >= 4.

    coeffs maps the integer mode index j to a complex coefficient; absent
    modes are zero. The identity configuration is {0: 1}.
    """

    alpha: float
    J: int
    coeffs: dict

    def __post_init__(self):
        ConeAngleSpec(self.alpha)  # validates the range
        if self.J < 4:
            raise ValueError(f"truncation order J must be at least 4, got {self.J}")
        clean = {}
        for j, c in self.coeffs.items():
            j = int(j)
            if abs(j) > self.J:
                raise ValueError(f"mode {j} exceeds the truncation order {self.J}")
            c = complex(c)
            if c != 0:
                clean[j] = c
        object.__setattr__(self, "coeffs", clean)

    def a(self, j):
        return self.coeffs.get(j, 0j)

    def items(self):
        return sorted(self.coeffs.items())

    @property
    def tail(self):
        """|a_J| + |a_-J|: the resolved-truncation diagnostic."""
        return abs(self.a(self.J)) + abs(self.a(-self.J))

    def with_coefficient(self, j, value):
        coeffs = dict(self.coeffs)
        coeffs[j] = value
        return TwistedSeries(self.alpha, self.J, coeffs)

    def boundary_frequency(self, j):
        """Angular frequency 1 + j/alpha of mode j on the wedge trace."""
        return 1.0 + j / self.alpha


def identity_series(alpha, J=4):
    return TwistedSeries(alpha=float(alpha), J=J, coeffs={0: 1.0 + 0j})


def parse_series_spec(alpha, text, J=None):
    """Parse 'a-1=0.1,a2=0.05j' into a TwistedSeries with a_0 defaulting to 1.

    Each item is a<j>=<python complex literal>. Useful for CLI presets; the
    identity coefficient is included unless explicitly overridden.
    """
    coeffs = {0: 1.0 + 0j}
    if text.strip():
        for item in text.split(","):
            lhs, rhs = item.split("=")
            lhs = lhs.strip()
            if not lhs.startswith("a"):
                raise ValueError(f"bad coefficient name {lhs!r}, expected a<j>=value")
            j = int(lhs[1:])
            coeffs[j] = complex(rhs.strip())
    if J is None:
        J = max(4, max(abs(j) for j in coeffs))
    return TwistedSeries(alpha=float(alpha), J=J, coeffs=coeffs)


# ---------------------------------------------------------------------------
# boundary analysis


@dataclass
class BoundaryAnalysis:
    """Diagnostics from projecting a wedge trace onto the twisted basis."""

    n_samples: int
    truncation_residual: float
    tail: float
    twist_gap: float = None


def analyze_boundary(trace, alpha, J, n_samples=None, twist_tol=1e-10):
    """Project a wedge-trace onto the twisted boundary basis.

    Args:
        trace: samples of phi(theta_tilde) at theta_tilde_k = 2 pi alpha k/N
            (uniform, endpoint excluded), or a callable phi(theta_tilde).
            With a callable the sector identification
            phi(2 pi alpha) = e^{2 pi i alpha} phi(0) is checked explicitly;
            samples cannot see the closed endpoint, so there the check
            degrades to the truncation diagnostics.
        alpha: cone angle parameter in (0, 1).
        J: truncation order (J >= 4).
        n_samples: sample count when trace is callable.

    Returns:
        (TwistedSeries, BoundaryAnalysis).

    Raises:
        Aliasing: 2J >= number of samples.
        TwistViolation: callable trace breaks the identification condition.
    """
    alpha = float(alpha)
    ConeAngleSpec(alpha)
    twist_gap = None
    if callable(trace):
        n = n_samples if n_samples is not None else max(4 * J + 4, 64)
        theta_t = 2.0 * np.pi * alpha * np.arange(n) / n
        values = np.asarray(trace(theta_t), dtype=complex)
        end = complex(np.asarray(trace(np.array([2.0 * np.pi * alpha]))).ravel()[0])
        start = values[0]
        twist_gap = abs(end - np.exp(2j * np.pi * alpha) * start)
        if twist_gap > twist_tol * max(1.0, abs(start)):
            raise TwistViolation(
                f"trace endpoint misses the rotated start by {twist_gap:.3e}; "
                "the data does not descend to the cone"
            )
    else:
        values = np.asarray(trace, dtype=complex)
        n = len(values)
        theta_t = 2.0 * np.pi * alpha * np.arange(n) / n
    if 2 * J >= n:
        raise Aliasing(
            f"J = {J} needs more than 2J = {2 * J} samples to avoid mode "
            f"collision, got {n}"
        )
    # de-twist: psi = phi e^{-i theta_tilde} is (2 pi alpha)-periodic
    psi = values * np.exp(-1j * theta_t)
    ahat = np.fft.fft(psi) / n
    coeffs = {}
    for j in range(-J, J + 1):
        coeffs[j] = ahat[j % n]
    kept = {j % n for j in range(-J, J + 1)}
    rest = np.array([ahat[m] for m in range(n) if m not in kept])
    truncation_residual = float(np.sqrt(np.sum(np.abs(rest) ** 2))) if len(rest) else 0.0
    series = TwistedSeries(alpha=alpha, J=J, coeffs=coeffs)
    return series, BoundaryAnalysis(
        n_samples=n,
        truncation_residual=truncation_residual,
        tail=series.tail,
        twist_gap=twist_gap,
    )


# ---------------------------------------------------------------------------
# synthesis


def _cone_mode_exponents(series):
    """(j, coeff, exponent, antiholomorphic?) per mode, disc coordinate."""
    a = series.alpha
    out = []
    for j, c in series.items():
        if j >= 0:
            out.append((j, c, a + j, False))
        else:
            p = abs(j) - a
            if p <= 0:
                raise NonConeMapping(
                    f"mode {j} has disc exponent {p} <= 0 and does not extend "
                    "over the cone point"
                )
            out.append((j, c, p, True))
    return out


def synthesize_solution(series, z_tilde):
    """Evaluate the series at wedge points (radius-1 convention).

    Mode j >= 0 contributes a_j z_tilde^(1+j/alpha); mode j < 0 contributes
    a_j r^(|j|/alpha-1) e^{-i(|j|/alpha-1) theta}, the branch that matches
    the twisted boundary basis. Points may be anywhere in the closed sector
    except the tip.
    """
    z_tilde = np.asarray(z_tilde, dtype=complex)
    r = np.abs(z_tilde)
    theta = np.mod(np.angle(z_tilde), 2.0 * np.pi)
    a = series.alpha
    out = np.zeros_like(z_tilde)
    for j, c, _, _ in _cone_mode_exponents(series):
        if j >= 0:
            p = 1.0 + j / a
            out = out + c * r**p * np.exp(1j * p * theta)
        else:
            q = abs(j) / a - 1.0
            out = out + c * r**q * np.exp(-1j * q * theta)
    return out


def synthesize_on_grid(series, grid, target=None, domain=None):
    """Sample the synthesized map on a BGrid, in disc coordinates.

    The wedge-side series is pushed back through the flattening charts:
    u(z) = u_tilde(z)^(1/alpha) with
    u_tilde(z) = sum_{j>=0} a_j z^(alpha+j) + sum_{j<0} a_j zbar^(|j|-alpha).
    Exact Wirtinger derivative samples are attached (u_tilde is a finite sum
    of holomorphic and antiholomorphic branch powers, so its derivatives are
    closed-form).

    Returns a MapField whose target defaults to the round cone of the series.
    """
    a = series.alpha
    r = grid.rmesh
    th = grid.thmesh
    ut = np.zeros(grid.shape, dtype=complex)
    ut_z = np.zeros(grid.shape, dtype=complex)
    ut_zbar = np.zeros(grid.shape, dtype=complex)
    for j, c, p, anti in _cone_mode_exponents(series):
        if not anti:
            ut += c * r**p * np.exp(1j * p * th)
            ut_z += c * p * r ** (p - 1.0) * np.exp(1j * (p - 1.0) * th)
        else:
            ut += c * r**p * np.exp(-1j * p * th)
            ut_zbar += c * p * r ** (p - 1.0) * np.exp(-1j * (p - 1.0) * th)
    mod = np.abs(ut)
    if np.any(mod == 0.0):
        raise NonConeMapping("synthesized map passes through the target cone point")
    # branch within pi of the twist guide alpha*theta, matching the trace
    # convention; a raw mod-2pi branch flips samples by e^{2 pi i / alpha}
    # when rounding noise pushes arg(u_tilde) just below the theta = 0 seam
    arg = _relative_arg(ut, a * th)

    def ut_power(p):
        return mod**p * np.exp(1j * p * arg)

    inv_a = 1.0 / a
    u = ut_power(inv_a)
    chain = inv_a * ut_power(inv_a - 1.0)
    u_z = chain * ut_z
    u_zbar = chain * ut_zbar
    # u_tilde is (anti)holomorphic mode by mode, so u_tilde_zzbar = 0
    u_zzbar = inv_a * (inv_a - 1.0) * ut_power(inv_a - 2.0) * ut_z * ut_zbar
    if target is None:
        target = round_cone_metric(a)
    return MapField(grid=grid, samples=u, target=target, domain=domain,
                    u_z=u_z, u_zbar=u_zbar, u_zzbar=u_zzbar)


# ---------------------------------------------------------------------------
# residue and energy in closed form


def residue_from_series(series):
    """Origin residue of the Hopf differential, disc coordinate.

    Only the (j, j') = (0, -1) mode pair has a z^-1 component, giving
    a_0 conj(a_-1) (1/alpha - 1); for the solver-normalized a_0 = 1 this is
    the textbook conj(a_-1)(-1 + 1/alpha).
    """
    a = series.alpha
    return series.a(0) * np.conj(series.a(-1)) * (1.0 / a - 1.0)


def series_energy(series, r_lo, r_hi):
    """Exact map energy of the synthesized solution over r_lo <= |z| <= r_hi.

    Mode orthogonality gives
        E = pi/(2 alpha^2) sum_j |a_j|^2 p_j (r_hi^(2 p_j) - r_lo^(2 p_j)),
    p_j the disc exponent of mode j. The identity over the full disc has
    E = pi/(2 alpha).
    """
    a = series.alpha
    total = 0.0
    for _, c, p, _ in _cone_mode_exponents(series):
        total += abs(c) ** 2 * p * (r_hi ** (2 * p) - r_lo ** (2 * p))
    return np.pi / (2.0 * a**2) * total


# ---------------------------------------------------------------------------
# boundary handling in disc coordinates


def _relative_arg(values, guide):
    """Argument of values unwrapped to within pi of the guide angles."""
    return guide + np.angle(values * np.exp(-1j * guide))


def wedge_trace(values, theta, alpha):
    """Wedge the disc-circle trace u(e^{i theta}) -> u^alpha.

    The branch follows the disc angle (arg u is unwrapped to stay within pi
    of theta), which is the continuous choice for traces winding once around
    the target cone, in particular anything near the identity.
    """
    arg = _relative_arg(np.asarray(values, dtype=complex), np.asarray(theta))
    return np.abs(values) ** alpha * np.exp(1j * alpha * arg)


def series_boundary_callable(series):
    """Disc-angle boundary trace theta -> u(e^{i theta}) of a series."""
    a = series.alpha
    modes = _cone_mode_exponents(series)

    def trace(theta):
        theta = np.asarray(theta, dtype=float)
        ut = np.zeros_like(theta, dtype=complex)
        for j, c, p, anti in modes:
            ut = ut + c * np.exp((-1j if anti else 1j) * p * theta)
        arg = _relative_arg(ut, a * theta)
        return np.abs(ut) ** (1.0 / a) * np.exp(1j * arg / a)

    return trace


def as_boundary_callable(boundary, alpha, J=16, n_samples=None):
    """Normalize a boundary input to a disc-angle callable.

    Accepts a TwistedSeries, a callable theta -> values, or an array of
    samples at uniform disc angles (resampled through its twisted series).
    """
    if isinstance(boundary, TwistedSeries):
        return series_boundary_callable(boundary)
    if callable(boundary):
        return boundary
    values = np.asarray(boundary, dtype=complex)
    n = len(values)
    theta = 2.0 * np.pi * np.arange(n) / n
    series, _ = analyze_boundary(
        wedge_trace(values, theta, alpha), alpha, J=min(J, (n - 1) // 2)
    )
    return series_boundary_callable(series)


def mobius(w, z):
    """Disc automorphism sending w to 0."""
    return (z - w) / (1.0 - np.conj(w) * z)


def mobius_inverse(w, zeta):
    """Inverse of mobius(w, .): sends 0 to w."""
    return (zeta + w) / (1.0 + np.conj(w) * zeta)


def recentre_boundary(trace, w):
    """Boundary trace of the problem recentred at w.

    The candidate cone position w is pulled to the origin by a disc Moebius
    map; the recentred trace at disc angle theta is the original trace at
    the preimage angle.
    """

    def moved(theta):
        zeta = np.exp(1j * np.asarray(theta, dtype=float))
        pre = mobius_inverse(w, zeta)
        return trace(np.mod(np.angle(pre), 2.0 * np.pi))

    return moved


# ---------------------------------------------------------------------------
# Dirichlet solves


@dataclass
class DirichletReport:
    """Admissibility and content report for a spectral Dirichlet solve.

    boundary_distance is a C^2-type proxy norm of the trace minus the
    identity, computed on the Fourier side:
    sum_j |a_j - delta_j0| (1 + |w_j| + w_j^2), w_j = 1 + j/alpha. The solve
    itself is well-defined regardless; near_identity records whether the
    small-data regime (distance <= threshold) that the downstream theory
    assumes actually holds.
    """

    series: TwistedSeries
    boundary_distance: float
    threshold: float
    near_identity: bool
    requires_translation: bool
    residue: complex
    truncation_residual: float
    tail: float
    twist_gap: float = None


def _boundary_proxy_distance(series):
    total = 0.0
    for j, c in series.items():
        w = series.boundary_frequency(j)
        d = abs(c - 1.0) if j == 0 else abs(c)
        total += d * (1.0 + abs(w) + w * w)
    return total


def solve_dirichlet(boundary, alpha, grid=None, J=16, n_samples=None,
                    threshold=0.1, target=None):
    """Solve the cone Dirichlet problem on the round model spectrally.

    Args:
        boundary: TwistedSeries (adopted as-is), disc-angle callable, or
            uniform disc-angle samples of the trace in disc coordinates.
        alpha: cone angle parameter.
        grid: output BGrid; default BGrid(-8, 97, 64).
        J: truncation order for analysis.
        threshold: admissibility threshold on the boundary proxy distance.
        target: override the round target metric (the samples are then an
            initial configuration rather than a harmonic map).

    Returns:
        (MapField, DirichletReport). For alpha > 1/2 a nonzero a_-1 makes
        the solution fall outside the cone-mapping form at the origin;
        requires_translation flags it (solve_augmented_dirichlet removes it).
    """
    alpha = float(alpha)
    if grid is None:
        grid = BGrid(t_min=-8.0, n_t=97, n_theta=64)
    twist_gap = None
    if isinstance(boundary, TwistedSeries):
        series = boundary
        truncation_residual = 0.0
    else:
        if callable(boundary):
            n = n_samples if n_samples is not None else max(4 * J + 4, 64)
            theta = 2.0 * np.pi * np.arange(n) / n
            values = np.asarray(boundary(theta), dtype=complex)
        else:
            values = np.asarray(boundary, dtype=complex)
            n = len(values)
            theta = 2.0 * np.pi * np.arange(n) / n
        wedged = wedge_trace(values, theta, alpha)
        series, analysis = analyze_boundary(wedged, alpha, J=J)
        truncation_residual = analysis.truncation_residual
        twist_gap = analysis.twist_gap
    distance = _boundary_proxy_distance(series)
    report = DirichletReport(
        series=series,
        boundary_distance=distance,
        threshold=threshold,
        near_identity=distance <= threshold,
        requires_translation=(alpha > 0.5 and abs(series.a(-1)) > 1e-10),
        residue=residue_from_series(series),
        truncation_residual=truncation_residual,
        tail=series.tail,
        twist_gap=twist_gap,
    )
    field = synthesize_on_grid(series, grid, target=target)
    return field, report


@dataclass
class AugmentedReport:
    """Outer Newton record for the residue-free (augmented) solve."""

    w: complex
    n_steps: int
    residual_history: tuple
    dirichlet: DirichletReport


def solve_augmented_dirichlet(boundary, alpha, grid=None, J=16, outer_tol=1e-9,
                              max_outer=30, fd_step=1e-5, window=0.5,
                              max_damping=8, n_samples=None):
    """Find the cone position w* killing a_-1, then solve there.

    Newton iteration on w -> a_-1(w), where a_-1(w) is the analyzed
    coefficient of the boundary trace recentred at w. The Jacobian is a
    central-difference 2x2 real matrix. Steps are damped by halving (up to
    max_damping) whenever |a_-1| fails to decrease.

    Returns:
        (MapField, w_star, AugmentedReport).

    Raises:
        OutOfDisc: the iteration left |w| <= window.
        NoConvergence: step budget exhausted; best iterate in payload.
    """
    alpha = float(alpha)
    trace = as_boundary_callable(boundary, alpha, J=J)
    n = n_samples if n_samples is not None else max(4 * J + 4, 64)
    theta = 2.0 * np.pi * np.arange(n) / n

    def a_minus1(w):
        moved = recentre_boundary(trace, w)
        wedged = wedge_trace(moved(theta), theta, alpha)
        series, _ = analyze_boundary(wedged, alpha, J=J)
        return series.a(-1)

    w = 0j
    f = a_minus1(w)
    history = [abs(f)]
    steps = 0
    while abs(f) > outer_tol:
        if steps >= max_outer:
            raise NoConvergence(
                f"augmented solve: |a_-1| = {abs(f):.3e} after {steps} steps",
                payload={"w": w, "history": tuple(history)},
            )
        h = fd_step
        fpr = a_minus1(w + h)
        fmr = a_minus1(w - h)
        fpi = a_minus1(w + 1j * h)
        fmi = a_minus1(w - 1j * h)
        jac = np.array(
            [
                [np.real(fpr - fmr), np.real(fpi - fmi)],
                [np.imag(fpr - fmr), np.imag(fpi - fmi)],
            ]
        ) / (2.0 * h)
        try:
            dw = np.linalg.solve(jac, -np.array([f.real, f.imag]))
        except np.linalg.LinAlgError:
            raise NoConvergence(
                "augmented solve: singular outer Jacobian",
                payload={"w": w, "history": tuple(history)},
            )
        step = dw[0] + 1j * dw[1]
        scale = 1.0
        for _ in range(max_damping + 1):
            cand = w + scale * step
            fc = a_minus1(cand)
            if abs(fc) < abs(f):
                break
            scale *= 0.5
        else:
            raise NoConvergence(
                "augmented solve: damping exhausted without decrease",
                payload={"w": w, "history": tuple(history)},
            )
        w, f = cand, fc
        if abs(w) > window:
            raise OutOfDisc(
                f"candidate cone position |w| = {abs(w):.3f} left the "
                f"centering window {window}",
                payload={"w": w, "history": tuple(history)},
            )
        history.append(abs(f))
        steps += 1

    field, dirichlet = solve_dirichlet(
        recentre_boundary(trace, w), alpha, grid=grid, J=J, n_samples=n
    )
    report = AugmentedReport(
        w=w, n_steps=steps, residual_history=tuple(history), dirichlet=dirichlet
    )
    return field, w, report


# ---------------------------------------------------------------------------
# cone angle pi: the double-cover normal form


@dataclass(frozen=True)
class HoloPower:
    """Remainder term c z^p on the double cover, integer p >= 2."""

    coeff: complex
    power: int

    def __post_init__(self):
        if self.power < 2 or int(self.power) != self.power:
            raise ValueError("remainder powers must be integers >= 2")

    def value(self, zt):
        return self.coeff * zt**self.power

    def d_z(self, zt):
        return self.coeff * self.power * zt ** (self.power - 1)

    def d_zbar(self, zt):
        return np.zeros_like(zt)


@dataclass(frozen=True)
class AntiholoPower:
    """Remainder term c conj(z)^p on the double cover, integer p >= 2."""

    coeff: complex
    power: int

    def __post_init__(self):
        if self.power < 2 or int(self.power) != self.power:
            raise ValueError("remainder powers must be integers >= 2")

    def value(self, zt):
        return self.coeff * np.conj(zt) ** self.power

    def d_z(self, zt):
        return np.zeros_like(zt)

    def d_zbar(self, zt):
        return self.coeff * self.power * np.conj(zt) ** (self.power - 1)


@dataclass(frozen=True)
class PiConeLift:
    """Normal form w = a z + b conj(z) + v on the double cover (angle pi).

    The cone of angle pi is the quotient of the plane by z -> -z; maps into
    it lift to odd maps of the cover, and near the cone point the lift is
    linear plus a faster remainder v (a bundle with value/d_z/d_zbar, or a
    tuple of such, or None). a must be nonzero for the form to be a
    nondegenerate cone mapping; |a| > |b| is the orientation proxy.
    """

    a: complex
    b: complex = 0j
    v: object = None

    def __post_init__(self):
        if self.a == 0:
            raise FormViolation("lift has a = 0; not a nondegenerate cone mapping")

    @property
    def orientation_ok(self):
        return abs(self.a) > abs(self.b)

    def _parts(self):
        if self.v is None:
            return ()
        if isinstance(self.v, (tuple, list)):
            return tuple(self.v)
        return (self.v,)

    def value(self, zt):
        out = self.a * zt + self.b * np.conj(zt)
        for p in self._parts():
            out = out + p.value(zt)
        return out

    def d_z(self, zt):
        out = np.full_like(np.asarray(zt, dtype=complex), self.a)
        for p in self._parts():
            out = out + p.d_z(zt)
        return out

    def d_zbar(self, zt):
        out = np.full_like(np.asarray(zt, dtype=complex), self.b)
        for p in self._parts():
            out = out + p.d_zbar(zt)
        return out


def pi_cone_residue(lift):
    """Origin residue of the pushed-forward Hopf differential: a conj(b)/4.

    On the cover the Hopf differential is (a + v_z) conj(b + v_zbar) dz^2
    with unit conformal factor; pushing forward through z -> z^2 divides by
    4 z and only the constant term contributes a residue.
    """
    return lift.a * np.conj(lift.b) / 4.0


def pi_lift_hopf_pushforward(lift, grid, tol=1e-8):
    """Push the lift's Hopf differential down to the cone as a HopfField.

    Samples the cover at the principal square root of the grid points; the
    result is single-valued whenever the remainder is equivariant (odd).
    """
    zt = np.sqrt(np.abs(grid.z)) * np.exp(0.5j * grid.thmesh)
    phi_cover = lift.d_z(zt) * np.conj(lift.d_zbar(zt))
    phi = phi_cover / (4.0 * grid.z)
    value, deviation, per_radius = contour_residue(phi, grid, tol=tol)
    return HopfField(grid=grid, phi=phi, residue_at_origin=value,
                     residue_deviation=deviation, per_radius=per_radius,
                     dbar_residual=float("nan"), eps_report=0.0)


def descend_pi_lift(lift, grid, target=None):
    """The map u = (lift)^2 on the cone of angle pi, with exact derivatives.

    Harmonic whenever the lift is (the cover is flat), which makes it a
    clean test configuration for the half-angle regime.
    """
    zt = np.sqrt(np.abs(grid.z)) * np.exp(0.5j * grid.thmesh)
    w = lift.value(zt)
    wz = lift.d_z(zt)
    wzb = lift.d_zbar(zt)
    u = w**2
    # chain rule through z = zt^2: d zt/dz = 1/(2 zt)
    u_z = w * wz / zt
    u_zbar = w * wzb / np.conj(zt)
    u_zzbar = wz * wzb / (2.0 * np.abs(zt) ** 2)
    if target is None:
        target = round_cone_metric(0.5)
    return MapField(grid=grid, samples=u, target=target,
                    u_z=u_z, u_zbar=u_zbar, u_zzbar=u_zzbar)
