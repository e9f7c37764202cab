import numpy as np
from conemaps.geometry import BGrid, ConicMetric, round_cone_metric, radial_trig_mu
from conemaps.field_ops import identity_map, tension, hopf, total_energy
from conemaps.cone_spectral import (TwistedSeries, solve_dirichlet, wedge_trace,
                                    series_boundary_callable, solve_augmented_dirichlet)
from conemaps.linearization import (indicial_family, linearization_fd_check,
                                    jacobi_solve, asymptotic_fit, linearized_hopf)
from conemaps.solver import (newton_relax, move_cone_point, ContinuationPath,
                             continue_path, energy_minimality_probe, SolverConfig)

rng = np.random.default_rng(7)

# 1. indicial data
fam = indicial_family(0.75, 2)
print("roots(0.75, |j|<=2):", sorted(fam.roots))
print("first_above_zero:", fam.first_above_zero, " first_above_one:", fam.first_above_one)
fam3 = indicial_family(1 / 3, 2)
print("alpha=1/3 first_above_zero:", fam3.first_above_zero,
      " first_above_one:", fam3.first_above_one)

# 2. FD/linearization consistency at a perturbed-metric base
grid = BGrid(t_min=-6.0, n_t=65, n_theta=32)
alpha = 1 / 3
target = ConicMetric(alpha=alpha, mu=radial_trig_mu(0.05, 2 * alpha, mode=1),
                     nu=2 * alpha + 0.45)
u0 = identity_map(grid, target)
psi = 0.01 * (np.exp(1j * grid.thmesh) * np.exp(grid.tmesh)
              + 0.5 * np.exp(-2j * grid.thmesh) * np.exp(1.3 * grid.tmesh))
for d in (1e-4, 1e-5):
    diff, scale = linearization_fd_check(u0, psi, delta=d)
    print(f"fd check delta={d:.0e}: sup diff {diff:.3e} scale {scale:.3e}")

# 3. jacobi trivial: boundary = z trace at round identity
rc = round_cone_metric(alpha)
uid = identity_map(grid, rc)
psi_z, rep = jacobi_solve(uid, np.exp(1j * grid.theta))
print("jacobi(z-trace): sup|psi - z| =", np.max(np.abs(psi_z - grid.z)),
      " residual:", rep.residual)
psi0, rep0 = jacobi_solve(uid, 0.0)
print("jacobi(0): sup =", np.max(np.abs(psi0)))

# 4. generic boundary at alpha=1/3 -> exponent 1.0
gridJ = BGrid(t_min=-8.0, n_t=97, n_theta=32)
uidJ = identity_map(gridJ, rc)
trace = 0.1 * np.exp(1j * gridJ.theta) + 0.03 * np.exp(2j * gridJ.theta) + 0.01
psiJ, repJ = jacobi_solve(uidJ, trace)
fit = asymptotic_fit(psiJ, gridJ)
print("alpha=1/3 fit: exponent", fit.exponent, "mode", fit.mode,
      "goodness", fit.goodness)

# 5. alpha=0.75 constant boundary -> exponent 0.5 + residue link
rc75 = round_cone_metric(0.75)
uid75 = identity_map(gridJ, rc75)
w = 0.05
psi75, rep75 = jacobi_solve(uid75, w)
fit75 = asymptotic_fit(psi75, gridJ, subtract_constant=True)
print("alpha=0.75 fit: exponent", fit75.exponent, "mode", fit75.mode,
      "coeff", fit75.coefficient, "const", fit75.constant,
      "goodness", fit75.goodness)
H = linearized_hopf(uid75, psi75, tol=1e-5)
pred = (1 - 0.75) * np.conj(fit75.coefficient)
print("residue link: contour", H.residue_at_origin, " predicted", pred,
      " rel err", abs(H.residue_at_origin - pred) / abs(pred))

# 6. newton on perturbed target from identity init
u_pert0 = identity_map(grid, target)
u_star, nrep = newton_relax(u_pert0)
print("newton: iters", nrep.iterations, "history",
      ["%.2e" % r for r in nrep.residual_history], "ratios",
      ["%.2f" % q for q in nrep.quadratic_ratios], "damped", nrep.damped_steps)
Hs = hopf(u_star)
print("hopf dbar residual:", Hs.dbar_residual, " residue:", Hs.residue_at_origin)

# 7. minimality probe on the converged solution
probe = energy_minimality_probe(u_star, n_samples=4, seed=3)
print("probe: E0 %.6f margins" % probe.base_energy,
      ["%.3e" % m for m in probe.margins])

# 8. move_cone_point vs augmented solve (round target, same data)
ser = TwistedSeries(alpha=0.3, J=8, coeffs={0: 1.0, -1: 0.05})
gridM = BGrid(t_min=-8.0, n_t=97, n_theta=64)
u_aug, w_aug, rep_aug = solve_augmented_dirichlet(series_boundary_callable(ser), 0.3, grid=gridM, J=8)
u_move, mrep = move_cone_point(series_boundary_callable(ser), 0.3, grid=gridM, J=8)
print("augmented w*:", rep_aug.w, " move w*:", mrep.w,
      " |residue|:", abs(mrep.residue), " steps:", mrep.n_steps)

# 9. continuation: grow a perturbed target from the identity configuration
def boundary_at(s):
    return lambda th: np.exp(1j * th)

def target_at(s):
    if s == 0.0:
        return rc
    return ConicMetric(alpha=alpha, mu=radial_trig_mu(0.05 * s, 2 * alpha, mode=1),
                       nu=2 * alpha + 0.45)

path = ContinuationPath(alpha=alpha, grid=grid, boundary_at=boundary_at,
                        target_at=target_at, ds_init=0.5)
res = continue_path(path)
for r in res.records:
    print(f"  s={r.s:.3f} E={r.energy:.8f} |Res|={abs(r.residue):.2e} "
          f"ten={r.tension_sup:.2e} it={r.newton_iterations}")
print("continuation OK, records:", len(res.records))
