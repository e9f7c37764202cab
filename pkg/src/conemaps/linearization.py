"""Linearization of the tension operator and its indicial structure.

For a base map u0 into rho = c e^{2 mu}|u|^{2(alpha-1)} |du|^2 the derivative
of the tension along psi, in the same b-normalized scaling as the tension
residual (multiply by |z|^2 sigma / 4), is

  N(psi) = 1/4 [ psi_tt + psi_thth
                 + Gamma(u0) (P0 (psi_t + i psi_th) + Q0 (psi_t - i psi_th))
                 + B1 psi + B2 conj(psi) ]

with P0 = u0_t - i u0_th, Q0 = u0_t + i u0_th,
B1 = P0 Q0 (2 mu_uu(u0) - (alpha-1)/u0^2), B2 = 2 P0 Q0 mu_uubar(u0).
(The zeroth-order coefficient is the u-derivative of Gamma = 2 mu_u +
(alpha-1)/u, hence the minus sign on (alpha-1)/u0^2.)

At the identity into the round cone the modes decouple and e^{s t + i j
theta} is annihilated iff s solves the indicial polynomial
s^2 + 2(alpha-1)s - j^2 - 2(alpha-1)j = 0, roots {j, 2 - 2 alpha - j}.

Linear systems are assembled sparse over the real/imaginary parts (the B2
term is antilinear) and solved with a direct factorization.
"""

import numpy as np
import scipy.sparse as sp
from dataclasses import dataclass
from scipy.sparse.linalg import spsolve

from .errors import NotHarmonic, PoorFit, SingularSystem
from .field_ops import HopfField, b_derivatives, contour_residue, tension, wirtinger


# ---------------------------------------------------------------------------
# indicial structure


def indicial_polynomial(alpha, mode):
    """Coefficients (1, b, c) of s^2 + b s + c for the given Fourier mode."""
    a = float(alpha)
    return (1.0, 2.0 * (a - 1.0), -float(mode) ** 2 - 2.0 * (a - 1.0) * mode)


def indicial_roots(alpha, mode):
    """The two indicial exponents of one Fourier mode: (j, 2 - 2 alpha - j)."""
    a = float(alpha)
    return (float(mode), 2.0 - 2.0 * a - float(mode))


@dataclass(frozen=True)
class IndicialData:
    """Indicial exponents of the linearized operator over a mode window.

    roots: sorted distinct exponents for |j| <= mode_window.
    per_mode: {j: (j, 2 - 2 alpha - j)}.
    coincidences: root values hit by more than one (mode, branch) pair;
        nonempty exactly at resonant angles (e.g. every half-integer gap at
        alpha = 1/2).
    first_above_zero / first_above_one: smallest root strictly above the
        threshold; these drive the decay rates available to Jacobi fields.
    """

    alpha: float
    mode_window: int
    roots: tuple
    per_mode: dict
    coincidences: tuple
    first_above_zero: float
    first_above_one: float


def indicial_family(alpha, mode_window):
    """Collect the indicial data for all modes |j| <= mode_window."""
    a = float(alpha)
    per_mode = {}
    all_roots = []
    for j in range(-mode_window, mode_window + 1):
        pair = indicial_roots(a, j)
        per_mode[j] = pair
        all_roots.extend(pair)
    rounded = np.round(np.array(all_roots), 12)
    uniq, counts = np.unique(rounded, return_counts=True)
    roots = tuple(float(r) for r in uniq)
    coincidences = tuple(float(r) for r, c in zip(uniq, counts) if c > 1)

    def first_above(x):
        for r in roots:
            if r > x + 1e-12:
                return float(r)
        return float("nan")

    return IndicialData(
        alpha=a,
        mode_window=mode_window,
        roots=roots,
        per_mode=per_mode,
        coincidences=coincidences,
        first_above_zero=first_above(0.0),
        first_above_one=first_above(1.0),
    )


# ---------------------------------------------------------------------------
# linearized tension, pointwise


def _coefficients(u0, use_analytic=True):
    """(Gamma, P0, Q0, B1, B2) fields of the linearization at u0."""
    m = u0.target
    a = m.alpha.alpha
    gamma = m.dlog_rho_du(u0.samples)
    if use_analytic and u0.has_analytic:
        z = u0.grid.z
        P0 = 2.0 * z * u0.u_z
        Q0 = 2.0 * np.conj(z) * u0.u_zbar
    else:
        ut, uth = b_derivatives(u0)
        P0 = ut - 1j * uth
        Q0 = ut + 1j * uth
    PQ = P0 * Q0
    B1 = PQ * (2.0 * m.mu_uu(u0.samples) - (a - 1.0) / u0.samples**2)
    B2 = PQ * 2.0 * m.mu_uubar(u0.samples)
    return gamma, P0, Q0, B1, B2


def linearized_tension(u0, psi, use_analytic=True):
    """Derivative of the normalized tension at u0 in direction psi.

    psi is differentiated with grid stencils; u0's derivatives use its
    analytic samples when carried (disable to match a pure stencil base).
    The output is in the normalized (b) scaling, so it compares directly
    against finite differences of tension(u).normalized.
    """
    grid = u0.grid
    gamma, P0, Q0, B1, B2 = _coefficients(u0, use_analytic)
    psi = np.asarray(psi, dtype=complex)
    pt = grid.d_t(psi)
    pth = grid.d_theta(psi)
    lap = grid.laplacian_b(psi)
    return 0.25 * (
        lap
        + gamma * (P0 * (pt + 1j * pth) + Q0 * (pt - 1j * pth))
        + B1 * psi
        + B2 * np.conj(psi)
    )


def linearized_hopf(u0, psi, use_analytic=True, tol=1e-8):
    """Linearized Hopf differential along psi, as a HopfField.

    Phi(psi) = (rho_u psi + rho_ubar conj(psi)) u0_z conj(u0_zbar)
             + rho(u0) (psi_z conj(u0_zbar) + conj(psi_zbar) u0_z).
    At the identity into the round cone this collapses to
    rho conj(psi_zbar).
    """
    grid = u0.grid
    m = u0.target
    rho = m.rho(u0.samples)
    rho_u = rho * m.dlog_rho_du(u0.samples)
    u_z, u_zbar = wirtinger(u0, use_analytic)
    pt = grid.d_t(np.asarray(psi, dtype=complex))
    pth = grid.d_theta(np.asarray(psi, dtype=complex))
    psi_z = (pt - 1j * pth) / (2.0 * grid.z)
    psi_zbar = (pt + 1j * pth) / (2.0 * np.conj(grid.z))
    dphi = (rho_u * psi + np.conj(rho_u * psi)) * u_z * np.conj(u_zbar) + rho * (
        psi_z * np.conj(u_zbar) + np.conj(psi_zbar) * u_z
    )
    value, deviation, per_radius = contour_residue(dphi, grid, tol=tol)
    return HopfField(grid=grid, phi=dphi, residue_at_origin=value,
                     residue_deviation=deviation, per_radius=per_radius,
                     dbar_residual=float("nan"), eps_report=0.0)


def linearization_fd_check(u0, psi, delta=1e-6):
    """Sup distance between L psi and a central tension difference.

    Both sides are evaluated on the pure stencil route so the comparison
    measures the linearization itself, not the derivative carrier. Returns
    (sup_difference, scale) over interior rows.
    """
    grid = u0.grid
    psi = np.asarray(psi, dtype=complex)
    plus = tension(u0.replace_samples(u0.samples + delta * psi)).normalized
    minus = tension(u0.replace_samples(u0.samples - delta * psi)).normalized
    fd = (plus - minus) / (2.0 * delta)
    lin = linearized_tension(u0, psi, use_analytic=False)
    inner = grid.interior_rows()
    sup = float(np.max(np.abs((fd - lin)[inner])))
    scale = max(float(np.max(np.abs(lin[inner]))), 1e-30)
    return sup, scale


# ---------------------------------------------------------------------------
# sparse assembly


def _inner_closure(alpha, inner, root):
    if inner == "default":
        if alpha < 0.5:
            return ("extrapolate", 1.0 if root is None else float(root))
        return ("homogeneous", None)
    if inner == "homogeneous":
        return ("homogeneous", None)
    if inner == "extrapolate":
        if root is None:
            root = 1.0 if alpha < 0.5 else 0.0
        return ("extrapolate", float(root))
    raise ValueError(f"unknown inner closure {inner!r}")


def build_linear_system(u0, inner="default", root=None, use_analytic=True):
    """Sparse real system for M psi = rhs, M = 4 * linearized tension.

    Unknowns are [Re psi; Im psi] over row-major nodes. Equation rows hold
    the operator; the outer boundary row is a Dirichlet identity and the
    inner row is closed by either

      homogeneous:      psi(t_min, .) = 0
      extrapolate(s):   psi(t_min, .) - e^{-s h_t} psi(t_min + h_t, .) = 0,

    which kills the indicial mode growing like e^{s t} exactly and damps
    slower ones. Defaults: extrapolate with s = 1 below alpha = 1/2 (the
    regime whose Jacobi fields are O(r)), homogeneous at and above (where
    the field tends to a constant already fixed by the configuration).

    Returns (A, closure) with A in CSR form.
    """
    grid = u0.grid
    alpha = u0.target.alpha.alpha
    closure = _inner_closure(alpha, inner, root)
    n_t, n_th = grid.shape
    N = n_t * n_th

    gamma, P0, Q0, B1, B2 = _coefficients(u0, use_analytic)
    Dt = sp.kron(grid.diff_t_matrix(1), sp.eye(n_th), format="csr")
    Dtt = sp.kron(grid.diff_t_matrix(2), sp.eye(n_th), format="csr")
    Dth = sp.kron(sp.eye(n_t), sp.csr_matrix(grid.theta_diff_matrix(1)), format="csr")
    Dthth = sp.kron(sp.eye(n_t), sp.csr_matrix(grid.theta_diff_matrix(2)), format="csr")

    def diag(f):
        return sp.diags(np.asarray(f, dtype=complex).ravel())

    # complex-linear part Z and antilinear part W (acting on conj psi)
    Z = (Dtt + Dthth).astype(complex)
    Z = Z + diag(gamma * P0) @ (Dt + 1j * Dth)
    Z = Z + diag(gamma * Q0) @ (Dt - 1j * Dth)
    Z = Z + diag(B1)
    W = diag(B2)

    Z = Z.tocsr()
    W = W.tocsr()
    A = sp.bmat(
        [
            [Z.real + W.real, -Z.imag + W.imag],
            [Z.imag + W.imag, Z.real - W.real],
        ],
        format="lil",
    )

    # boundary rows, applied identically to both real blocks
    def set_row(node, entries):
        for block in (0, N):
            A.rows[node + block] = [c + block for c, _ in entries]
            A.data[node + block] = [v for _, v in entries]

    kind, s = closure
    fac = float(np.exp(-s * grid.h_t)) if kind == "extrapolate" else 0.0
    for k in range(n_th):
        inner_node = k
        outer_node = (n_t - 1) * n_th + k
        set_row(outer_node, [(outer_node, 1.0)])
        if kind == "homogeneous":
            set_row(inner_node, [(inner_node, 1.0)])
        else:
            set_row(inner_node, [(inner_node, 1.0), (n_th + k, -fac)])
    return A.tocsr(), closure


def solve_linear_system(A, grid, rhs_interior, outer_values, tol=1e-10):
    """Solve the assembled system for psi given interior RHS and outer trace.

    rhs_interior is a complex field (used away from the boundary rows);
    outer_values is the complex Dirichlet trace at t = 0. Inner closure rows
    are homogeneous. Raises SingularSystem if the factorization degenerates
    or the relative residual exceeds tol.
    """
    n_t, n_th = grid.shape
    N = n_t * n_th
    b = np.asarray(rhs_interior, dtype=complex).copy()
    b[0, :] = 0.0
    b[-1, :] = np.asarray(outer_values, dtype=complex)
    rhs = np.concatenate([b.real.ravel(), b.imag.ravel()])
    with np.errstate(all="ignore"):
        x = spsolve(A, rhs)
    if not np.all(np.isfinite(x)):
        raise SingularSystem("direct solve returned non-finite values")
    resid = np.linalg.norm(A @ x - rhs, np.inf)
    scale = max(np.linalg.norm(rhs, np.inf), 1.0)
    if resid > tol * scale:
        raise SingularSystem(
            f"linear solve relative residual {resid / scale:.3e} exceeds {tol:.1e}"
        )
    psi = x[:N].reshape(grid.shape) + 1j * x[N:].reshape(grid.shape)
    return psi


@dataclass
class JacobiReport:
    closure: tuple
    residual: float


def jacobi_solve(u0, boundary, inner="default", root=None, use_analytic=True,
                 tol=1e-10, tol_harmonic=1e-6):
    """Solve the Jacobi (linearized) equation M psi = 0 with given trace.

    Args:
        u0: harmonic base map (normalized tension checked against
            tol_harmonic).
        boundary: complex trace of psi at the outer circle (n_theta values,
            or a scalar for a constant trace).
        inner: inner closure: "default", "homogeneous", or "extrapolate"
            (with optional indicial root override).

    Returns:
        (psi, JacobiReport).
    """
    ten = tension(u0, use_analytic=use_analytic)
    if ten.sup_normalized > tol_harmonic:
        raise NotHarmonic(
            f"base map tension {ten.sup_normalized:.3e} exceeds {tol_harmonic:.1e}"
        )
    grid = u0.grid
    boundary = np.broadcast_to(np.asarray(boundary, dtype=complex), (grid.n_theta,))
    A, closure = build_linear_system(u0, inner=inner, root=root,
                                     use_analytic=use_analytic)
    rhs = np.zeros(grid.shape, dtype=complex)
    psi = solve_linear_system(A, grid, rhs, boundary, tol=tol)
    Mpsi = 4.0 * linearized_tension(u0, psi, use_analytic=use_analytic)
    inner_rows = grid.interior_rows()
    residual = float(np.max(np.abs(Mpsi[inner_rows])))
    return psi, JacobiReport(closure=closure, residual=residual)


# ---------------------------------------------------------------------------
# asymptotic structure fits


@dataclass
class ModeFit:
    mode: int
    exponent: float
    coefficient: complex
    goodness: float
    amplitude: float


@dataclass
class FitResult:
    """Dominant-mode exponential fit of a field near the cone point.

    exponent/coefficient/mode describe the dominant term
    coefficient * e^{exponent t + i mode theta} over the fit window;
    constant is the subtracted mode-0 inner limit (0 when not requested).
    """

    exponent: float
    coefficient: complex
    mode: int
    goodness: float
    constant: complex
    window: tuple
    per_mode: tuple


def fit_profile_constant(profile, t):
    """Fit profile(t) ~ c + A e^{s t} and return (c, A, s).

    For each decay rate s the best (c, A) is linear least squares; the rate
    is chosen by scanning the profiled residual and refining by golden
    section. A plain average of the deepest samples would be biased whenever
    the constant and the correction term are comparable, which is exactly
    the regime this estimator exists for.
    """
    prof = np.asarray(profile, dtype=complex)
    t = np.asarray(t, dtype=float)

    def profiled(s):
        design = np.column_stack([np.ones_like(t), np.exp(s * t)]).astype(complex)
        sol, *_ = np.linalg.lstsq(design, prof, rcond=None)
        resid = prof - design @ sol
        return float(np.vdot(resid, resid).real), sol

    rates = np.linspace(0.05, 4.0, 80)
    k = int(np.argmin([profiled(s)[0] for s in rates]))
    a = rates[max(k - 1, 0)]
    b = rates[min(k + 1, len(rates) - 1)]
    gr = (np.sqrt(5.0) - 1.0) / 2.0
    c1, c2 = b - gr * (b - a), a + gr * (b - a)
    f1, f2 = profiled(c1)[0], profiled(c2)[0]
    for _ in range(40):
        if f1 < f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - gr * (b - a)
            f1 = profiled(c1)[0]
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + gr * (b - a)
            f2 = profiled(c2)[0]
    s_best = 0.5 * (a + b)
    _, sol = profiled(s_best)
    return complex(sol[0]), complex(sol[1]), float(s_best)


def _fitted_constant(field, grid, window):
    """Mode-0 inner limit of a field by the profiled-constant fit."""
    i0, i1 = window
    prof = np.mean(field, axis=1)[i0 : i1 + 1]
    c, _, _ = fit_profile_constant(prof, grid.t[i0 : i1 + 1])
    return c


def asymptotic_fit(field, grid, window=None, subtract_constant=False,
                   min_amplitude=1e-12, goodness_threshold=0.99):
    """Fit field ~ constant + c e^{s t} e^{i j theta} on a radial window.

    Args:
        field: complex samples on the grid.
        window: inclusive row index pair; default covers the middle half of
            the rows, clear of both the inner closure and the boundary.
        subtract_constant: fit and remove the mode-0 inner limit before the
            per-mode regressions (the structure of slowly decaying fields
            with a nonzero limit at the cone point).
        min_amplitude: modes below this fraction of the strongest mode are
            ignored.
        goodness_threshold: minimal r^2 of the dominant-mode regression.

    Returns:
        FitResult with per-mode details.

    Raises:
        PoorFit: dominant mode fails the goodness threshold, or no mode
            rises above the amplitude floor.
    """
    field = np.asarray(field, dtype=complex)
    n_t, n_th = grid.shape
    if window is None:
        window = (n_t // 4, (3 * n_t) // 4)
    i0, i1 = window
    constant = 0j
    if subtract_constant:
        constant = _fitted_constant(field, grid, (i0, i1))
    work = field - constant
    modes = np.fft.fft(work, axis=1) / n_th
    t = grid.t[i0 : i1 + 1]
    fits = []
    peak = float(np.max(np.abs(modes[i0 : i1 + 1])))
    if peak == 0.0:
        raise PoorFit("field vanishes on the fit window")
    for m in range(n_th):
        j = m if m <= n_th // 2 else m - n_th
        y = np.abs(modes[i0 : i1 + 1, m])
        if np.max(y) < min_amplitude * peak or np.any(y == 0.0):
            continue
        logy = np.log(y)
        slope, intercept = np.polyfit(t, logy, 1)
        pred = slope * t + intercept
        ss_res = float(np.sum((logy - pred) ** 2))
        ss_tot = float(np.sum((logy - logy.mean()) ** 2))
        if ss_tot < 1e-24:
            goodness = 1.0 if ss_res < 1e-20 else 0.0
        else:
            goodness = 1.0 - ss_res / ss_tot
        coeff = complex(np.mean(modes[i0 : i1 + 1, m] * np.exp(-slope * t)))
        amplitude = float(np.exp(intercept + slope * t[len(t) // 2]))
        fits.append(ModeFit(mode=j, exponent=float(slope), coefficient=coeff,
                            goodness=goodness, amplitude=amplitude))
    if not fits:
        raise PoorFit("no mode rises above the amplitude floor on the window")
    dominant = max(fits, key=lambda f: f.amplitude)
    if dominant.goodness < goodness_threshold:
        raise PoorFit(
            f"dominant mode {dominant.mode} fits with r^2 = "
            f"{dominant.goodness:.4f} < {goodness_threshold}",
            payload=tuple(fits),
        )
    return FitResult(
        exponent=dominant.exponent,
        coefficient=dominant.coefficient,
        mode=dominant.mode,
        goodness=dominant.goodness,
        constant=constant,
        window=(i0, i1),
        per_mode=tuple(fits),
    )
