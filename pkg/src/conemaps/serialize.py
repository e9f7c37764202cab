"""File formats: field CSV with JSON grid header, series and metric JSON,
report serialization, and flat key-value config files.

Field CSV columns are (t, theta, re, im), one row per node in row-major
(t outer) order; the sibling .json header carries everything needed to
rebuild the grid and the target metric. No timestamps are written anywhere,
so identical runs produce identical bytes.
"""

import csv
import json
from dataclasses import asdict, is_dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .cone_spectral import TwistedSeries
from .errors import ConemapsError
from .field_ops import MapField
from .geometry import BGrid, ConicMetric, RadialTrigScalar, SumScalar


# ---------------------------------------------------------------------------
# metric and grid headers


def metric_to_dict(metric):
    """JSON-ready description of a ConicMetric."""
    out = {"alpha": metric.alpha.alpha, "c": metric.c, "nu": metric.nu}
    if metric.mu is not None:
        out["mu"] = _mu_to_dict(metric.mu)
    return out


def _mu_to_dict(mu):
    if isinstance(mu, RadialTrigScalar):
        return {"kind": "radial_trig", "amplitude": mu.amplitude,
                "power": mu.power, "mode": mu.mode, "phase": mu.phase}
    if isinstance(mu, SumScalar):
        return {"kind": "sum", "terms": [_mu_to_dict(p) for p in mu.parts]}
    raise ConemapsError(f"cannot serialize metric perturbation {type(mu).__name__}")


def _mu_from_dict(d):
    if d["kind"] == "radial_trig":
        return RadialTrigScalar(d["amplitude"], d["power"], d["mode"], d["phase"])
    if d["kind"] == "sum":
        return SumScalar(parts=tuple(_mu_from_dict(t) for t in d["terms"]))
    raise ConemapsError(f"unknown perturbation kind {d['kind']!r}")


def metric_from_dict(d):
    mu = _mu_from_dict(d["mu"]) if "mu" in d and d["mu"] is not None else None
    return ConicMetric(alpha=d["alpha"], c=d.get("c", 1.0), mu=mu,
                       nu=d.get("nu"))


# ---------------------------------------------------------------------------
# fields


def write_complex_csv(path, grid, values):
    """Complex grid data as (t, theta, re, im) rows, t-major order."""
    values = np.asarray(values)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "theta", "re", "im"])
        for i in range(grid.n_t):
            for k in range(grid.n_theta):
                v = complex(values[i, k])
                writer.writerow([repr(grid.t[i]), repr(grid.theta[k]),
                                 repr(v.real), repr(v.imag)])


def write_field(path, u):
    """Write a MapField as <path>.csv plus a <path>.json grid header."""
    base = Path(path)
    grid = u.grid
    write_complex_csv(base.with_suffix(".csv"), grid, u.samples)
    header = {
        "t_min": grid.t_min,
        "n_t": grid.n_t,
        "n_theta": grid.n_theta,
        "r_outer": grid.r_outer,
        "target": metric_to_dict(u.target),
    }
    if u.domain is not None:
        header["domain"] = metric_to_dict(u.domain)
    with open(base.with_suffix(".json"), "w") as fh:
        json.dump(header, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_field(path):
    """Rebuild a MapField from <path>.csv and its .json header."""
    base = Path(path)
    with open(base.with_suffix(".json")) as fh:
        header = json.load(fh)
    grid = BGrid(t_min=header["t_min"], n_t=header["n_t"],
                 n_theta=header["n_theta"], r_outer=header.get("r_outer", 1.0))
    samples = np.zeros(grid.shape, dtype=complex)
    with open(base.with_suffix(".csv"), newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        flat = [complex(float(row[2]), float(row[3])) for row in reader]
    if len(flat) != grid.n_t * grid.n_theta:
        raise ConemapsError(
            f"field file has {len(flat)} rows, grid wants "
            f"{grid.n_t * grid.n_theta}")
    samples[:] = np.array(flat).reshape(grid.shape)
    target = metric_from_dict(header["target"])
    domain = metric_from_dict(header["domain"]) if "domain" in header else None
    return MapField(grid=grid, samples=samples, target=target, domain=domain)


def write_scalar_csv(path, grid, values, name="value"):
    """Real scalar field as (t, theta, name) rows."""
    values = np.asarray(values)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "theta", name])
        for i in range(grid.n_t):
            for k in range(grid.n_theta):
                writer.writerow([repr(grid.t[i]), repr(grid.theta[k]),
                                 repr(float(values[i, k]))])


# ---------------------------------------------------------------------------
# series and boundary data


def series_to_dict(series):
    return {
        "alpha": series.alpha,
        "J": series.J,
        "coeffs": [
            {"j": j, "re": a.real, "im": a.imag} for j, a in series.items()
        ],
    }


def series_from_dict(d):
    coeffs = {int(c["j"]): complex(c["re"], c["im"]) for c in d["coeffs"]}
    return TwistedSeries(alpha=d["alpha"], J=int(d["J"]), coeffs=coeffs)


def write_series(path, series):
    with open(path, "w") as fh:
        json.dump(series_to_dict(series), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_series(path):
    with open(path) as fh:
        return series_from_dict(json.load(fh))


def read_boundary_csv(path):
    """Boundary trace from (theta, re, im) rows -> (theta, values)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        rows = [(float(r[0]), complex(float(r[1]), float(r[2]))) for r in reader]
    theta = np.array([r[0] for r in rows])
    values = np.array([r[1] for r in rows])
    return theta, values


# ---------------------------------------------------------------------------
# reports and summaries


def jsonable(obj):
    """Recursively convert reports (dataclasses, arrays, complex) to
    JSON-compatible structures. Complex numbers become {re, im}; large
    arrays are summarized by shape and sup-norm rather than dumped."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return {k: jsonable(v) for k, v in asdict(obj).items()}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        if obj.size <= 64:
            return [jsonable(v) for v in obj.tolist()]
        return {"shape": list(obj.shape),
                "sup": float(np.max(np.abs(obj)))}
    if isinstance(obj, (bool, int, float, str)) or obj is None:
        return obj
    return repr(obj)


def write_summary(path, payload):
    """Deterministic summary.json (sorted keys, no timestamps)."""
    with open(path, "w") as fh:
        json.dump(jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# flat key-value configs


def parse_config_value(text):
    """Typed parse of a config value: bool, int, float, complex, or str."""
    s = text.strip()
    low = s.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float, complex):
        try:
            return cast(s)
        except ValueError:
            continue
    return s


def read_config(path):
    """Flat `key = value` file with # comments -> dict."""
    path = Path(path)
    if not path.is_file():
        raise ConemapsError(f"config file not found: {path}")
    out = {}
    for line in path.read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConemapsError(f"malformed config line: {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = parse_config_value(value)
    return out


def write_config(path, values):
    with open(path, "w") as fh:
        for key in sorted(values):
            fh.write(f"{key} = {values[key]}\n")
