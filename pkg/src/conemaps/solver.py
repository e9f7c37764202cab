"""Nonlinear solvers: damped Newton relaxation, cone-point relocation,
parameter continuation, and the local minimality probe.

The discrete unknown is the full sample array of the map; each Newton step
solves the b-normalized linearized system (the same scaling as the reported
tension residual) with the outer trace frozen and the inner row closed by the
indicial-aware conditions of the linearization module. The inner closure pins
the cone-point behavior of the iterates, so the initial configuration should
already carry the correct asymptotics there; spectral initializations do.
"""

import numpy as np
from dataclasses import dataclass, replace as dc_replace

from .cone_spectral import recentre_boundary, as_boundary_callable, solve_dirichlet
from .errors import DegenerateJacobian, MinimalityViolated, NoConvergence, OutOfDisc, PathStuck
from .field_ops import h_l_jacobian, hopf, tension, total_energy
from .geometry import WeightedNormSpec, weighted_b_norm
from .linearization import build_linear_system, solve_linear_system


@dataclass(frozen=True)
class SolverConfig:
    """Iteration budgets and tolerances shared by the nonlinear solvers."""

    newton_tol: float = 1e-9
    max_newton: int = 25
    max_damping: int = 8
    outer_tol: float = 1e-8
    max_outer: int = 30
    fd_step: float = 1e-5
    degenerate_fraction: float = 0.01
    # contour-agreement allowance for residues recorded along iterations;
    # looser than the verification default because stencil-derived phi on
    # moderate grids drifts at the discretization order
    residue_tol: float = 1e-5


@dataclass
class NewtonReport:
    converged: bool
    iterations: int
    residual_history: tuple
    damped_steps: int
    quadratic_ratios: tuple


def _interior_sup(field, grid):
    return float(np.max(np.abs(field[grid.interior_rows()])))


def newton_relax(u_init, config=None, inner="default", root=None):
    """Relax a configuration to a harmonic map by damped Newton.

    The outer boundary row of u_init is held fixed. Iterates are sample
    arrays (derivatives by stencils), so the converged object solves the
    discretized harmonic map equation to config.newton_tol in the normalized
    tension.

    Returns:
        (MapField, NewtonReport); re-running on a converged output exits
        immediately with zero iterations and no damping.

    Raises:
        DegenerateJacobian: h - l <= 0 on more than the allowed fraction of
            interior nodes at some iterate.
        NoConvergence: iteration budget exhausted (best iterate in payload).
    """
    cfg = config if config is not None else SolverConfig()
    u = u_init.replace_samples(u_init.samples)
    grid = u.grid

    def residual(field):
        return _interior_sup(tension(field).normalized, grid)

    def check_jacobian(field):
        h, l, jac = h_l_jacobian(field)
        inner_rows = grid.interior_rows()
        frac = float(np.mean(jac[inner_rows] <= 0.0))
        if frac > cfg.degenerate_fraction:
            raise DegenerateJacobian(
                f"Jacobian density nonpositive on {100 * frac:.1f}% of "
                "interior nodes; the iterate is no immersion",
                payload=field,
            )

    res = residual(u)
    history = [res]
    damped = 0
    it = 0
    while res > cfg.newton_tol and it < cfg.max_newton:
        check_jacobian(u)
        A, _ = build_linear_system(u, inner=inner, root=root, use_analytic=False)
        rhs = -4.0 * tension(u).normalized
        delta = solve_linear_system(A, grid, rhs, np.zeros(grid.n_theta))
        scale = 1.0
        accepted = None
        for k in range(cfg.max_damping + 1):
            cand = u.replace_samples(u.samples + scale * delta)
            cand_res = residual(cand)
            if cand_res < res:
                accepted = (cand, cand_res)
                if k > 0:
                    damped += 1
                break
            scale *= 0.5
        if accepted is None:
            raise NoConvergence(
                f"Newton stalled at residual {res:.3e} after {it} iterations",
                payload=u,
            )
        u, res = accepted
        history.append(res)
        it += 1
    if res > cfg.newton_tol:
        raise NoConvergence(
            f"Newton reached max_newton = {cfg.max_newton} at residual {res:.3e}",
            payload=u,
        )
    floor = 1e-16
    logs = [np.log(max(r, floor)) for r in history]
    ratios = tuple(
        float(logs[k + 1] / logs[k]) for k in range(len(logs) - 1) if logs[k] < 0
    )
    return u, NewtonReport(
        converged=True,
        iterations=it,
        residual_history=tuple(history),
        damped_steps=damped,
        quadratic_ratios=ratios,
    )


# ---------------------------------------------------------------------------
# cone point relocation


@dataclass
class MoveReport:
    w: complex
    residue: complex
    n_steps: int
    residue_history: tuple
    newton_iterations: tuple


def move_cone_point(boundary, alpha, grid=None, target=None, config=None, J=16):
    """Find the cone position w* at which the Hopf residue vanishes.

    Outer Newton on w -> Res(phi) of the harmonic solution of the problem
    recentred at w: spectral solve, then (for non-round targets) Newton
    relaxation, then contour residue. The residue-free position is the
    energy-critical cone placement.

    Returns:
        (MapField at w*, MoveReport).

    Raises:
        OutOfDisc: |w| left the centering window 0.5.
        NoConvergence: outer budget exhausted.
    """
    cfg = config if config is not None else SolverConfig()
    alpha = float(alpha)
    trace = as_boundary_callable(boundary, alpha, J=J)
    newton_iters = []

    def solve_at(w):
        u0, _ = solve_dirichlet(recentre_boundary(trace, w), alpha, grid=grid,
                                J=J, target=target)
        if target is None or target.is_round:
            newton_iters.append(0)
            return u0
        u, rep = newton_relax(u0, config=cfg)
        newton_iters.append(rep.iterations)
        return u

    def residue_at(w):
        return hopf(solve_at(w), tol=cfg.residue_tol).residue_at_origin

    w = 0j
    f = residue_at(w)
    history = [abs(f)]
    steps = 0
    while abs(f) > cfg.outer_tol:
        if steps >= cfg.max_outer:
            raise NoConvergence(
                f"cone relocation: |residue| = {abs(f):.3e} after {steps} steps",
                payload={"w": w, "history": tuple(history)},
            )
        h = cfg.fd_step
        d_re = (residue_at(w + h) - residue_at(w - h)) / (2.0 * h)
        d_im = (residue_at(w + 1j * h) - residue_at(w - 1j * h)) / (2.0 * h)
        jac = np.array([[d_re.real, d_im.real], [d_re.imag, d_im.imag]])
        try:
            dw = np.linalg.solve(jac, -np.array([f.real, f.imag]))
        except np.linalg.LinAlgError:
            raise NoConvergence("cone relocation: singular outer Jacobian",
                                payload={"w": w, "history": tuple(history)})
        step = dw[0] + 1j * dw[1]
        scale = 1.0
        for _ in range(cfg.max_damping + 1):
            cand = w + scale * step
            fc = residue_at(cand)
            if abs(fc) < abs(f):
                break
            scale *= 0.5
        else:
            raise NoConvergence("cone relocation: damping exhausted",
                                payload={"w": w, "history": tuple(history)})
        w, f = cand, fc
        if abs(w) > 0.5:
            raise OutOfDisc(
                f"candidate cone position |w| = {abs(w):.3f} left the window 0.5",
                payload={"w": w, "history": tuple(history)},
            )
        history.append(abs(f))
        steps += 1
    u_star = solve_at(w)
    return u_star, MoveReport(
        w=w,
        residue=f,
        n_steps=steps,
        residue_history=tuple(history),
        newton_iterations=tuple(newton_iters),
    )


# ---------------------------------------------------------------------------
# continuation


@dataclass(frozen=True)
class ContinuationPath:
    """A one-parameter family of Dirichlet problems, s in [0, s_end].

    boundary_at(s) yields a disc-angle trace callable; target_at(s) a
    ConicMetric. s = 0 must be a configuration the spectral engine solves
    exactly (this is checked before marching).
    """

    alpha: float
    grid: object
    boundary_at: object
    target_at: object
    s_end: float = 1.0
    ds_init: float = 0.25
    ds_min: float = 1.0 / 64.0
    J: int = 16


@dataclass
class PathRecord:
    s: float
    energy: float
    residue: complex
    tension_sup: float
    newton_iterations: int


@dataclass
class PathResult:
    records: tuple
    final: object


def continue_path(path, config=None):
    """March the family from s = 0 to s = s_end with adaptive steps.

    Zeroth-order predictor (previous samples, refreshed outer trace),
    Newton corrector; the step halves on NoConvergence or DegenerateJacobian
    and grows back after successes. Records energy, residue, and residual
    data at every accepted parameter value.

    Raises:
        PathStuck: the corrector failed at the minimal step size.
    """
    cfg = config if config is not None else SolverConfig()

    def corrected(u_pred, s):
        u0 = dc_replace(u_pred.replace_samples(u_pred.samples),
                        target=path.target_at(s))
        return newton_relax(u0, config=cfg)

    # the s = 0 configuration must be exactly solvable
    u0, _ = solve_dirichlet(path.boundary_at(0.0), path.alpha, grid=path.grid,
                            J=path.J, target=path.target_at(0.0))
    u, rep = corrected(u0, 0.0)
    records = [PathRecord(
        s=0.0,
        energy=float(total_energy(u)),
        residue=hopf(u, tol=cfg.residue_tol).residue_at_origin,
        tension_sup=rep.residual_history[-1],
        newton_iterations=rep.iterations,
    )]

    s = 0.0
    ds = path.ds_init
    while s < path.s_end - 1e-14:
        ds = min(ds, path.s_end - s)
        s_try = s + ds
        trace = path.boundary_at(s_try)
        pred = u.samples.copy()
        pred[-1, :] = trace(path.grid.theta)
        try:
            u_new, rep = corrected(u.replace_samples(pred), s_try)
        except (NoConvergence, DegenerateJacobian):
            if ds <= path.ds_min * (1.0 + 1e-12):
                raise PathStuck(
                    f"continuation cannot advance past s = {s:.4f} even at "
                    f"ds = {ds:.2e}",
                    payload={"records": tuple(records), "last": u},
                )
            ds *= 0.5
            continue
        u = u_new
        s = s_try
        records.append(PathRecord(
            s=s,
            energy=float(total_energy(u)),
            residue=hopf(u, tol=cfg.residue_tol).residue_at_origin,
            tension_sup=rep.residual_history[-1],
            newton_iterations=rep.iterations,
        ))
        ds = min(ds * 2.0, path.ds_init)
    return PathResult(records=tuple(records), final=u)


# ---------------------------------------------------------------------------
# minimality probe


@dataclass
class ProbeReport:
    base_energy: float
    margins: tuple
    min_margin: float
    amplitude: float
    n_samples: int
    seed: int


def energy_minimality_probe(u_star, n_samples=8, amplitude=1e-3, seed=0,
                            norm_spec=None, mode_fraction=0.25):
    """Compare E(u* + delta) against E(u*) for random admissible variations.

    Perturbations vanish at both grid edges, are band-limited to
    |j| <= mode_fraction * n_theta, and are normalized to the requested
    amplitude in the weighted b-norm (default c = 1, k = 1). Energies are
    evaluated with the same stencil quadrature on both sides, so margins
    measure the energy landscape, not a derivative-route mismatch.

    Returns:
        ProbeReport with all margins (E(u*+delta) - E(u*)).

    Raises:
        MinimalityViolated: some margin is negative beyond rounding; the
            witness perturbation is attached as payload.
    """
    if norm_spec is None:
        norm_spec = WeightedNormSpec(weight_c=1.0, order_k=1)
    grid = u_star.grid
    rng = np.random.default_rng(seed)
    e0 = total_energy(u_star, use_analytic=False)
    profile = (np.exp(grid.tmesh) - np.exp(grid.t_min)) * (1.0 - np.exp(grid.tmesh))
    j_max = max(1, int(mode_fraction * grid.n_theta))
    margins = []
    for _ in range(n_samples):
        field = np.zeros(grid.shape, dtype=complex)
        for j in range(-j_max, j_max + 1):
            c = rng.standard_normal() + 1j * rng.standard_normal()
            field += c * np.exp(1j * j * grid.thmesh)
        delta = profile * field
        norm = weighted_b_norm(delta, grid, norm_spec)
        delta *= amplitude / norm
        e1 = total_energy(u_star.replace_samples(u_star.samples + delta),
                          use_analytic=False)
        margin = e1 - e0
        if margin < -1e-12 * max(1.0, abs(e0)):
            raise MinimalityViolated(
                f"perturbation lowered the energy by {-margin:.3e}",
                payload={"delta": delta, "margin": margin, "seed": seed},
            )
        margins.append(margin)
    return ProbeReport(
        base_energy=e0,
        margins=tuple(margins),
        min_margin=float(min(margins)),
        amplitude=amplitude,
        n_samples=n_samples,
        seed=seed,
    )
