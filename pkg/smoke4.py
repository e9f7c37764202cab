import numpy as np
from conemaps.geometry import BGrid, round_cone_metric, WeightedNormSpec
from conemaps.field_ops import MapField, identity_map, energy_density
from conemaps.diagnostics import (subsolution_check, generate_supersolution,
                                  harnack_check, form_fit, rescale_probe,
                                  cone_classification_check)
from conemaps.errors import HypothesisFail, FormViolation

grid = BGrid(t_min=-8.0, n_t=97, n_theta=32)

# 1. subsolution
rep = subsolution_check(np.ones(grid.shape), grid)
print("const:", rep.passed, rep.pointwise_min, rep.weak_max)
rep = subsolution_check(-grid.rmesh**2, grid)
print("-r^2:", rep.passed, "(pointwise fails:", not rep.passed_pointwise, ")")
rc = round_cone_metric(1 / 3)
e_id = energy_density(identity_map(grid, rc))
rep = subsolution_check(e_id, grid)
print("e(id):", rep.passed, "min lap", rep.pointwise_min, "weak", rep.weak_max)

# 2. harnack
f1 = np.ones(grid.shape)
r = harnack_check(f1, grid, 0.5, 0.0)
print("f=1:", r.passed, "slack", r.slack)
try:
    harnack_check(1.0 + np.sqrt(grid.rmesh), grid, 0.5, 0.01)
    print("sqrt supersolution: NOT FLAGGED (bug)")
except HypothesisFail as e:
    print("sqrt supersolution flagged:", str(e)[:60])
rng = np.random.default_rng(0)
for alpha, sigma in [(0.25, 0.01), (0.5, 0.001), (0.75, 0.0)]:
    bdry = 1.0 + 0.2 * np.cos(grid.theta) + 0.1 * np.sin(2 * grid.theta)
    f = generate_supersolution(grid, alpha, sigma, bdry)
    r = harnack_check(f, grid, alpha, sigma)
    print(f"generated a={alpha} s={sigma}: passed {r.passed} slack {r.slack:.3e} "
          f"eps {r.epsilon_rate:.3f}")

# 3. form_fit
u = MapField(grid, 2.0 * np.array(grid.z), rc)
ft = form_fit(u)
print("2z:", ft.lam, ft.epsilon, ft.v_norm)
u = MapField(grid, np.array(grid.z) + 0.1 * np.array(grid.z) ** 4, rc)
ft = form_fit(u)
print("z+0.1z^4:", ft.lam, "eps", ft.epsilon, "v_norm", ft.v_norm,
      "goodness", ft.goodness)
rc5 = round_cone_metric(0.5)
zt = np.sqrt(grid.rmesh) * np.exp(0.5j * grid.thmesh)
lift = zt + 0.2j * np.conj(zt) + 0.01 * zt**2
u5 = MapField(grid, lift**2, rc5)
ft5 = form_fit(u5)
print("pi lift:", ft5.a, ft5.b, "v_sup", ft5.v_sup, "orient", ft5.orientation_ok)

# 4. rescale probe
samples = np.array(grid.z) + grid.rmesh**1.5 * np.exp(1j * grid.thmesh)
u = MapField(grid, samples, rc)
spec = WeightedNormSpec(weight_c=1.5, order_k=1)
resc, rrep = rescale_probe(u, 1.0, 0.5, norm_spec=spec)
print("rescale: expected", rrep.expected_ratio, "actual", rrep.actual_ratio,
      "gap", abs(rrep.expected_ratio - rrep.actual_ratio))
resc, rrep = rescale_probe(u, 2.0, 0.25, norm_spec=WeightedNormSpec(1.0, 1))
print("rescale2: expected", rrep.expected_ratio, "actual", rrep.actual_ratio)

# 5. classification
u = MapField(grid, 3.0 * np.exp(1j * np.pi / 4) * np.array(grid.z), rc)
c = cone_classification_check(u)
print("3e^{ipi/4}z:", c.passed, "verdict", c.verdict, "lam", c.lam)
u = MapField(grid, np.array(grid.z) + 0.1 * np.conj(np.array(grid.z)), rc)
c = cone_classification_check(u)
print("z+0.1conj(z): harmonic", c.harmonic, "sup_l", c.sup_l,
      "passed", c.passed)
u = MapField(grid, np.array(grid.z) + 0.01 * np.array(grid.z) ** 4, rc)
c = cone_classification_check(u)
print("z+0.01z^4: harmonic", c.harmonic, "verdict", c.verdict, "passed", c.passed)
