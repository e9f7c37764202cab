"""Batch front door: one subcommand per workflow.

Each run owns a run directory containing a config snapshot, recorded
library versions, and a deterministic summary.json (inputs, tolerances,
outcomes; no timestamps, so repeated runs with the same seed produce
identical bytes). Exit codes: 0 success, 2 solver non-convergence or a
failed verification, 3 invalid input.
"""

import argparse
import json
import os
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from .cone_spectral import (
    parse_series_spec,
    series_boundary_callable,
    solve_augmented_dirichlet,
    solve_dirichlet,
)
from .diagnostics import cone_classification_check, form_fit, subsolution_check
from .errors import (
    ConemapsError,
    DegenerateJacobian,
    InconsistentResidue,
    MinimalityViolated,
    NoConvergence,
    NotHarmonic,
    OutOfDisc,
    PathStuck,
    SingularSystem,
)
from .field_ops import bochner_check, energy_density, hopf, tension, total_energy
from .geometry import BGrid, ConicMetric, RadialTrigScalar, round_cone_metric
from .linearization import indicial_family
from .solver import (
    ContinuationPath,
    SolverConfig,
    continue_path,
    energy_minimality_probe,
    newton_relax,
)
from . import serialize

OUTPUT_ROOT_VAR = "CONEMAPS_OUT"

_SOLVER_FAILURES = (
    NoConvergence,
    PathStuck,
    DegenerateJacobian,
    SingularSystem,
    OutOfDisc,
    InconsistentResidue,
    NotHarmonic,
)


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage failures exit with code 3."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(3)


# ---------------------------------------------------------------------------
# shared plumbing


def _add_common(p, needs_alpha=False):
    p.add_argument("--alpha", type=float, required=needs_alpha,
                   help="cone angle parameter (angle = 2*pi*alpha)")
    p.add_argument("--grid-nt", type=int, default=97,
                   help="radial grid rows (default 97)")
    p.add_argument("--grid-ntheta", type=int, default=64,
                   help="angular grid columns (default 64)")
    p.add_argument("--tmin", type=float, default=-8.0,
                   help="inner cutoff log-radius (default -8)")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for randomized probes (default 0)")
    p.add_argument("--out", default=None,
                   help=f"run directory (default ${OUTPUT_ROOT_VAR}/<command> "
                        "or runs/<command>)")


def _run_dir(args, command):
    if args.out:
        path = Path(args.out)
    else:
        root = os.environ.get(OUTPUT_ROOT_VAR, "runs")
        path = Path(root) / command
    path.mkdir(parents=True, exist_ok=True)
    return path


def _grid(args):
    return BGrid(t_min=args.tmin, n_t=args.grid_nt, n_theta=args.grid_ntheta)


def _snapshot(run_dir, args, tolerances):
    """Record the resolved configuration and library versions."""
    config = {k.replace("-", "_"): v for k, v in vars(args).items()
              if k not in ("handler", "command", "out") and v is not None}
    serialize.write_config(run_dir / "config.cfg", config)
    versions = {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }
    with open(run_dir / "versions.json", "w") as fh:
        json.dump(versions, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return {"inputs": serialize.jsonable(config),
            "tolerances": serialize.jsonable(tolerances)}


def _resolve_boundary(args):
    """--boundary accepts preset:a<j>=value,... or a (theta, re, im) CSV."""
    spec = args.boundary
    if spec.startswith("preset:"):
        return parse_series_spec(args.alpha, spec[len("preset:"):])
    path = Path(spec)
    if not path.is_file():
        raise ConemapsError(f"boundary file not found: {spec}")
    theta, values = serialize.read_boundary_csv(path)
    expected = 2.0 * np.pi * np.arange(len(theta)) / len(theta)
    if not np.allclose(theta, expected, atol=1e-9):
        raise ConemapsError(
            "boundary CSV must sample theta uniformly on [0, 2*pi)")
    return values


# ---------------------------------------------------------------------------
# subcommands


def _cmd_indicial_roots(args):
    run_dir = _run_dir(args, "indicial-roots")
    summary = _snapshot(run_dir, args, {})
    data = indicial_family(args.alpha, args.window)

    print(f"indicial exponents, alpha = {data.alpha}, |j| <= {data.mode_window}")
    print(f"{'j':>4}  {'branch j':>12}  {'branch 2-2a-j':>14}")
    for j in sorted(data.per_mode):
        r1, r2 = data.per_mode[j]
        print(f"{j:>4}  {r1:>12.6f}  {r2:>14.6f}")
    roots = " ".join(f"{r:.6f}" for r in data.roots)
    print(f"distinct roots ({len(data.roots)}): {roots}")
    print(f"first above 0: {data.first_above_zero:.6f}   "
          f"first above 1: {data.first_above_one:.6f}")
    if data.coincidences:
        print("coincident roots: "
              + " ".join(f"{r:.6f}" for r in data.coincidences))
    else:
        print("coincident roots: none")

    summary["indicial"] = serialize.jsonable(data)
    serialize.write_summary(run_dir / "summary.json", summary)
    return 0


def _cmd_cone_dirichlet(args):
    run_dir = _run_dir(args, "cone-dirichlet")
    summary = _snapshot(run_dir, args, {"threshold": args.threshold})
    boundary = _resolve_boundary(args)
    u, report = solve_dirichlet(boundary, args.alpha, grid=_grid(args),
                                J=args.truncation, threshold=args.threshold)
    serialize.write_field(run_dir / "field", u)
    serialize.write_series(run_dir / "series.json", report.series)
    summary["report"] = serialize.jsonable(report)
    summary["residue"] = serialize.jsonable(report.residue)
    summary["energy"] = total_energy(u, use_analytic=False)
    serialize.write_summary(run_dir / "summary.json", summary)
    print(f"residue at origin: {report.residue:.8g}")
    if report.requires_translation:
        print("a_-1 != 0 with alpha > 1/2: cone-point translation required "
              "(run cone-augmented)")
    return 0


def _cmd_cone_augmented(args):
    run_dir = _run_dir(args, "cone-augmented")
    summary = _snapshot(run_dir, args, {"tol_outer": args.tol_outer})
    boundary = _resolve_boundary(args)
    u, w, report = solve_augmented_dirichlet(
        boundary, args.alpha, grid=_grid(args), J=args.truncation,
        outer_tol=args.tol_outer, max_outer=args.max_outer)
    serialize.write_field(run_dir / "field", u)
    serialize.write_series(run_dir / "series.json", report.dirichlet.series)
    summary["report"] = serialize.jsonable(report)
    summary["w"] = serialize.jsonable(w)
    summary["final_a_minus_1"] = serialize.jsonable(
        report.dirichlet.series.a(-1))
    serialize.write_summary(run_dir / "summary.json", summary)
    print(f"cone position w* = {w:.10g} after {report.n_steps} steps; "
          f"|a_-1| = {abs(report.dirichlet.series.a(-1)):.3g}")
    return 0


def _resolve_config(args, extra_defaults=()):
    """Read a config file and fill in explicit defaults for the snapshot."""
    cfg = serialize.read_config(args.config)
    if "alpha" not in cfg:
        raise ConemapsError("config must set alpha")
    alpha = float(cfg["alpha"])
    resolved = {
        "alpha": alpha,
        "boundary": "",
        "grid_nt": 97,
        "grid_ntheta": 64,
        "tmin": -8.0,
        "mu_amplitude": 0.0,
        "mu_power": 2.0 * alpha,
        "mu_mode": 0,
        "mu_phase": 0.0,
        "nu": 2.0 * alpha + 0.45,
        "c": 1.0,
        "tol_newton": 1e-9,
        "tol_residue": 1e-5,
        "max_newton": 25,
    }
    resolved.update(extra_defaults)
    unknown = set(cfg) - set(resolved)
    if unknown:
        raise ConemapsError(f"unknown config keys: {sorted(unknown)}")
    resolved.update(cfg)
    return resolved


def _target_from_config(cfg):
    alpha = cfg["alpha"]
    if cfg["mu_amplitude"] == 0.0:
        return round_cone_metric(alpha, c=cfg["c"])
    mu = RadialTrigScalar(amplitude=cfg["mu_amplitude"], power=cfg["mu_power"],
                          mode=int(cfg["mu_mode"]), phase=cfg["mu_phase"])
    return ConicMetric(alpha=alpha, c=cfg["c"], mu=mu, nu=cfg["nu"])


def _config_grid(cfg):
    return BGrid(t_min=cfg["tmin"], n_t=int(cfg["grid_nt"]),
                 n_theta=int(cfg["grid_ntheta"]))


def _cmd_solve(args):
    cfg = _resolve_config(args)
    alpha = cfg["alpha"]
    run_dir = _run_dir(args, "solve")
    tolerances = {"tol_newton": cfg["tol_newton"]}
    summary = _snapshot(run_dir, args, tolerances)
    summary["config"] = serialize.jsonable(cfg)
    serialize.write_config(run_dir / "config.cfg", cfg)

    grid = _config_grid(cfg)
    boundary = parse_series_spec(alpha, str(cfg["boundary"]))
    target = _target_from_config(cfg)
    u0, dirichlet = solve_dirichlet(boundary, alpha, grid=grid,
                                    target=None if target.is_round else target)
    solver_cfg = SolverConfig(newton_tol=cfg["tol_newton"],
                              max_newton=int(cfg["max_newton"]))
    if target.is_round:
        u, report = u0, None
    else:
        u, report = newton_relax(u0, config=solver_cfg)
    serialize.write_field(run_dir / "field", u)
    hopf_field = hopf(u, use_analytic=target.is_round, tol=cfg["tol_residue"])
    summary["dirichlet"] = serialize.jsonable(dirichlet)
    summary["newton"] = serialize.jsonable(report) if report else None
    summary["tension_sup"] = float(np.max(np.abs(
        tension(u, use_analytic=False).normalized[grid.interior_rows()])))
    summary["energy"] = total_energy(u, use_analytic=False)
    summary["residue"] = serialize.jsonable(hopf_field.residue_at_origin)
    summary["dbar_residual"] = hopf_field.dbar_residual
    serialize.write_summary(run_dir / "summary.json", summary)
    iters = report.iterations if report else 0
    print(f"solve finished: {iters} Newton steps, "
          f"tension sup {summary['tension_sup']:.3g}, "
          f"energy {summary['energy']:.8g}")
    return 0


def _cmd_continue(args):
    cfg = _resolve_config(args, extra_defaults={
        "s_end": 1.0, "ds_init": 0.25, "ds_min": 1.0 / 64.0, "truncation": 16})
    if cfg["mu_amplitude"] == 0.0:
        raise ConemapsError("continue config must set a nonzero mu_amplitude")
    alpha = cfg["alpha"]
    run_dir = _run_dir(args, "continue")
    tolerances = {"tol_newton": cfg["tol_newton"]}
    summary = _snapshot(run_dir, args, tolerances)
    summary["config"] = serialize.jsonable(cfg)
    serialize.write_config(run_dir / "config.cfg", cfg)

    grid = _config_grid(cfg)
    series = parse_series_spec(alpha, str(cfg["boundary"]))
    trace = series_boundary_callable(series)

    def target_at(s):
        scaled = dict(cfg)
        scaled["mu_amplitude"] = s * float(cfg["mu_amplitude"])
        return _target_from_config(scaled)

    path = ContinuationPath(
        alpha=alpha, grid=grid,
        boundary_at=lambda s: trace,
        target_at=target_at,
        s_end=float(cfg["s_end"]),
        ds_init=float(cfg["ds_init"]),
        ds_min=float(cfg["ds_min"]),
        J=int(cfg["truncation"]))
    solver_cfg = SolverConfig(newton_tol=cfg["tol_newton"])

    def _write_steps(records):
        with open(run_dir / "steps.csv", "w") as fh:
            fh.write("step,s,energy,residue_re,residue_im,"
                     "tension_sup,newton_iterations\n")
            for i, rec in enumerate(records):
                fh.write(f"{i},{rec.s!r},{rec.energy!r},"
                         f"{rec.residue.real!r},{rec.residue.imag!r},"
                         f"{rec.tension_sup!r},{rec.newton_iterations}\n")

    try:
        result = continue_path(path, config=solver_cfg)
    except PathStuck as exc:
        records = exc.payload.get("records", ()) if exc.payload else ()
        _write_steps(records)
        summary["records"] = serialize.jsonable(records)
        summary["stuck"] = str(exc)
        serialize.write_summary(run_dir / "summary.json", summary)
        print(f"continuation stuck: {exc}", file=sys.stderr)
        return 2

    _write_steps(result.records)
    serialize.write_field(run_dir / "field", result.final)
    summary["records"] = serialize.jsonable(result.records)
    summary["final_energy"] = result.records[-1].energy
    serialize.write_summary(run_dir / "summary.json", summary)
    print(f"continuation reached s = {result.records[-1].s:g} in "
          f"{len(result.records)} accepted steps; final energy "
          f"{result.records[-1].energy:.8g}")
    return 0


def _cmd_hopf_analyze(args):
    run_dir = _run_dir(args, "hopf-analyze")
    summary = _snapshot(run_dir, args, {"tol_residue": args.tol_residue})
    u = serialize.read_field(args.field)
    hopf_field = hopf(u, use_analytic=False, tol=args.tol_residue)
    serialize.write_complex_csv(run_dir / "phi.csv", u.grid, hopf_field.phi)
    summary["residue"] = serialize.jsonable(hopf_field.residue_at_origin)
    summary["residue_deviation"] = hopf_field.residue_deviation
    summary["per_radius"] = serialize.jsonable(hopf_field.per_radius)
    summary["dbar_residual"] = hopf_field.dbar_residual
    summary["eps_report"] = hopf_field.eps_report
    serialize.write_summary(run_dir / "summary.json", summary)
    print(f"residue {hopf_field.residue_at_origin:.8g} "
          f"(deviation {hopf_field.residue_deviation:.3g}), "
          f"dbar residual {hopf_field.dbar_residual:.3g}")
    return 0


def _cmd_diagnostics(args):
    run_dir = _run_dir(args, "diagnostics")
    summary = _snapshot(run_dir, args, {
        "tol_harmonic": args.tol_harmonic,
        "tol_bochner": args.tol_bochner,
        "classification_tolerance": args.tolerance,
    })
    u = serialize.read_field(args.field)
    checks = {}
    all_ok = True

    def run_check(name, fn, judge):
        nonlocal all_ok
        try:
            report = fn()
        except ConemapsError as exc:
            checks[name] = {"passed": False, "error": str(exc)}
            all_ok = False
            return
        passed = bool(judge(report))
        checks[name] = {"passed": passed, "report": serialize.jsonable(report)}
        all_ok = all_ok and passed

    run_check(
        "classification",
        lambda: cone_classification_check(u, tolerance=args.tolerance,
                                          tol_harmonic=args.tol_harmonic),
        lambda rep: rep.passed)
    run_check(
        "form_fit",
        lambda: form_fit(u),
        lambda rep: True)
    run_check(
        "bochner",
        lambda: bochner_check(u, tol_harmonic=args.tol_harmonic,
                              use_analytic=False),
        lambda rep: rep.inequality_min_slack >= -args.tol_bochner)
    run_check(
        "energy_subsolution",
        lambda: subsolution_check(energy_density(u, use_analytic=False),
                                  u.grid, tol=args.tol_bochner, seed=args.seed),
        lambda rep: rep.passed)

    summary["checks"] = checks
    summary["passed"] = all_ok
    serialize.write_summary(run_dir / "summary.json", summary)
    for name, result in checks.items():
        status = "pass" if result["passed"] else "FAIL"
        note = "" if "error" not in result else f"  ({result['error']})"
        print(f"{name:>20}: {status}{note}")
    return 0 if all_ok else 2


def _cmd_probe_minimality(args):
    if (args.field is None) == (args.boundary is None):
        raise ConemapsError(
            "probe-minimality needs exactly one of --field or --boundary")
    run_dir = _run_dir(args, "probe-minimality")
    summary = _snapshot(run_dir, args, {"amplitude": args.amplitude})
    if args.field is not None:
        u = serialize.read_field(args.field)
    else:
        if args.alpha is None:
            raise ConemapsError("--boundary form requires --alpha")
        u, _ = solve_dirichlet(_resolve_boundary(args), args.alpha,
                               grid=_grid(args))
    try:
        report = energy_minimality_probe(
            u, n_samples=args.n_samples, amplitude=args.amplitude,
            seed=args.seed)
    except MinimalityViolated as exc:
        delta = exc.payload["delta"]
        serialize.write_complex_csv(run_dir / "witness.csv", u.grid, delta)
        summary["violation"] = {
            "margin": exc.payload["margin"],
            "seed": exc.payload["seed"],
            "witness": "witness.csv",
        }
        serialize.write_summary(run_dir / "summary.json", summary)
        print(f"minimality violated: margin {exc.payload['margin']:.3g}, "
              f"witness written to {run_dir / 'witness.csv'}", file=sys.stderr)
        return 2
    summary["probe"] = serialize.jsonable(report)
    serialize.write_summary(run_dir / "summary.json", summary)
    print(f"all {report.n_samples} perturbations raised the energy; "
          f"min margin {report.min_margin:.3g}")
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def build_parser():
    parser = _Parser(prog="conemaps",
                     description="Harmonic maps into cones: solvers, "
                                 "linearization, and diagnostics.")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("indicial-roots",
                       help="exponent table of the linearized operator")
    _add_common(p, needs_alpha=True)
    p.add_argument("--window", type=int, default=3,
                   help="max |j| of the mode window (default 3)")
    p.set_defaults(handler=_cmd_indicial_roots)

    p = sub.add_parser("cone-dirichlet",
                       help="spectral Dirichlet solve on the round cone")
    _add_common(p, needs_alpha=True)
    p.add_argument("--boundary", required=True,
                   help="preset:a<j>=value,... or a (theta, re, im) CSV file")
    p.add_argument("--truncation", type=int, default=16,
                   help="series truncation order (default 16)")
    p.add_argument("--threshold", type=float, default=0.1,
                   help="near-identity admissibility threshold (default 0.1)")
    p.set_defaults(handler=_cmd_cone_dirichlet)

    p = sub.add_parser("cone-augmented",
                       help="Dirichlet solve with the cone point moved to "
                            "kill the residue")
    _add_common(p, needs_alpha=True)
    p.add_argument("--boundary", required=True,
                   help="preset:a<j>=value,... or a (theta, re, im) CSV file")
    p.add_argument("--truncation", type=int, default=16)
    p.add_argument("--tol-outer", type=float, default=1e-9,
                   help="outer Newton tolerance on |a_-1| (default 1e-9)")
    p.add_argument("--max-outer", type=int, default=30)
    p.set_defaults(handler=_cmd_cone_augmented)

    p = sub.add_parser("solve",
                       help="Newton relaxation for a perturbed target "
                            "(config-file driven)")
    _add_common(p)
    p.add_argument("--config", required=True,
                   help="flat key-value config file")
    p.set_defaults(handler=_cmd_solve)

    p = sub.add_parser("continue",
                       help="pseudo-arclength family march from the round "
                            "target (config-file driven)")
    _add_common(p)
    p.add_argument("--config", required=True,
                   help="flat key-value config file")
    p.set_defaults(handler=_cmd_continue)

    p = sub.add_parser("hopf-analyze",
                       help="quadratic differential, residue, and decay of a "
                            "stored field")
    _add_common(p)
    p.add_argument("--field", required=True,
                   help="field base path (reads <path>.csv and <path>.json)")
    p.add_argument("--tol-residue", type=float, default=1e-5,
                   help="contour-agreement tolerance; stored fields carry "
                        "stencil-level drift (default 1e-5)")
    p.set_defaults(handler=_cmd_hopf_analyze)

    p = sub.add_parser("diagnostics",
                       help="classification, form fit, curvature and "
                            "subsolution checks of a stored field")
    _add_common(p)
    p.add_argument("--field", required=True,
                   help="field base path (reads <path>.csv and <path>.json)")
    p.add_argument("--tolerance", type=float, default=0.05,
                   help="classification verdict tolerance (default 0.05)")
    p.add_argument("--tol-harmonic", type=float, default=1e-5,
                   help="stencil tension allowance (default 1e-5)")
    p.add_argument("--tol-bochner", type=float, default=1e-4,
                   help="grid-dependent slack allowance (default 1e-4)")
    p.set_defaults(handler=_cmd_diagnostics)

    p = sub.add_parser("probe-minimality",
                       help="random-variation energy comparison at a "
                            "candidate minimizer")
    _add_common(p)
    p.add_argument("--field", default=None,
                   help="field base path of the candidate minimizer")
    p.add_argument("--boundary", default=None,
                   help="solve this boundary spectrally first (needs --alpha)")
    p.add_argument("--n-samples", type=int, default=16)
    p.add_argument("--amplitude", type=float, default=1e-3)
    p.set_defaults(handler=_cmd_probe_minimality)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except _SOLVER_FAILURES as exc:
        print(f"conemaps {args.command}: {exc}", file=sys.stderr)
        return 2
    except (ConemapsError, OSError, ValueError) as exc:
        print(f"conemaps {args.command}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
