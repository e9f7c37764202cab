"""Cone geometry: angle bookkeeping, conic metrics, log-polar grids, norms.

The model cone of angle 2*pi*alpha (0 < alpha < 1) is the punctured unit disc
with metric rho |du|^2, rho(u) = c exp(2 mu(u)) |u|^(2(alpha-1)). The grid is
log-polar, t = log(r/r_outer) in [t_min, 0], theta in [0, 2*pi), uniform in
both. Radial derivatives are taken in the scale-invariant variable t (so all
operators below are "b-operators": r d/dr = d/dt), with 4th-order stencils in
t and spectral differentiation in theta.

Conventions used throughout the package:
  - polar angles are always reduced to [0, 2*pi); fractional powers of a
    complex array are computed as r^p exp(i p theta) with that branch, never
    through a complex log
  - the b-Laplacian is f_tt + f_theta_theta; the flat Laplacian is that
    divided by r^2
"""

import numpy as np
import scipy.sparse as sp
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from scipy.integrate import simpson

from .errors import InsufficientRegularity, ZeroInput


# ---------------------------------------------------------------------------
# cone angle


class AngleClass(Enum):
    LESS_THAN_PI = "less_than_pi"
    EQUAL_PI = "equal_pi"
    GREATER_THAN_PI = "greater_than_pi"


@dataclass(frozen=True)
class ConeAngleSpec:
    """A cone angle 2*pi*alpha with its analytic regime.

    alpha = 1/2 (cone angle pi) is a genuinely different regime and is
    detected by exact comparison, so pass alpha as an exact float (0.5 is
    exactly representable; 1/3 is its own honest regime marker either way).
    """

    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(
                f"alpha must lie in (0, 1), got {self.alpha}; "
                "alpha = 1 is a smooth point, not a cone"
            )

    @property
    def classification(self):
        if self.alpha == 0.5:
            return AngleClass.EQUAL_PI
        if self.alpha < 0.5:
            return AngleClass.LESS_THAN_PI
        return AngleClass.GREATER_THAN_PI

    @property
    def angle(self):
        """The full cone angle 2*pi*alpha."""
        return 2.0 * np.pi * self.alpha


def _as_alpha(alpha):
    """Accept a float or a ConeAngleSpec, return the float."""
    if isinstance(alpha, ConeAngleSpec):
        return alpha.alpha
    return ConeAngleSpec(float(alpha)).alpha


# ---------------------------------------------------------------------------
# scalar bundles on the punctured disc (used for the conformal factor mu)


@dataclass(frozen=True)
class RadialTrigScalar:
    """mu(r, theta) = amplitude * r^power * cos(mode*theta + phase).

    Carries analytic b-derivatives (d/dt = r d/dr) so that curvature and
    linearized-operator coefficients need no grid differentiation. power > 0
    keeps mu continuous at the cone point.
    """

    amplitude: float
    power: float
    mode: int = 0
    phase: float = 0.0

    def __post_init__(self):
        if self.power <= 0:
            raise ValueError("power must be positive so mu extends to the cone point")

    def _parts(self, r, theta):
        return self.amplitude * r**self.power, self.mode * theta + self.phase

    def value(self, r, theta):
        a, ang = self._parts(r, theta)
        return a * np.cos(ang)

    def dt(self, r, theta):
        return self.power * self.value(r, theta)

    def dtheta(self, r, theta):
        a, ang = self._parts(r, theta)
        return -self.mode * a * np.sin(ang)

    def dtt(self, r, theta):
        return self.power**2 * self.value(r, theta)

    def dttheta(self, r, theta):
        return self.power * self.dtheta(r, theta)

    def dthetatheta(self, r, theta):
        return -self.mode**2 * self.value(r, theta)


@dataclass(frozen=True)
class SumScalar:
    """Pointwise sum of scalar bundles (each with the b-derivative methods)."""

    parts: tuple

    def value(self, r, theta):
        return sum(p.value(r, theta) for p in self.parts)

    def dt(self, r, theta):
        return sum(p.dt(r, theta) for p in self.parts)

    def dtheta(self, r, theta):
        return sum(p.dtheta(r, theta) for p in self.parts)

    def dtt(self, r, theta):
        return sum(p.dtt(r, theta) for p in self.parts)

    def dttheta(self, r, theta):
        return sum(p.dttheta(r, theta) for p in self.parts)

    def dthetatheta(self, r, theta):
        return sum(p.dthetatheta(r, theta) for p in self.parts)


def radial_trig_mu(amplitude, power, mode=0, phase=0.0):
    """Convenience constructor for the standard perturbation profile."""
    return RadialTrigScalar(amplitude, power, mode, phase)


# ---------------------------------------------------------------------------
# conic metric


def polar_parts(w):
    """Split complex data into (r, theta) with theta reduced to [0, 2*pi)."""
    w = np.asarray(w, dtype=complex)
    r = np.abs(w)
    theta = np.mod(np.angle(w), 2.0 * np.pi)
    return r, theta


def branch_power(w, p):
    """w^p computed as r^p exp(i p theta), theta in [0, 2*pi)."""
    r, theta = polar_parts(w)
    return r**p * np.exp(1j * p * theta)


@dataclass(frozen=True)
class ConicMetric:
    """rho(u) |du|^2 with rho = c exp(2 mu(u)) |u|^(2(alpha-1)).

    mu is None for the round cone, or a scalar bundle (RadialTrigScalar /
    SumScalar) with analytic b-derivatives. When mu is present a decay rate
    nu > 2*alpha must be declared; it certifies that the perturbation dies
    fast enough at the cone point for the asymptotic theory to apply.
    """

    alpha: ConeAngleSpec
    c: float = 1.0
    mu: object = None
    nu: float = None

    def __post_init__(self):
        if not isinstance(self.alpha, ConeAngleSpec):
            object.__setattr__(self, "alpha", ConeAngleSpec(float(self.alpha)))
        if self.c <= 0:
            raise ValueError(f"conformal constant c must be positive, got {self.c}")
        if self.mu is not None:
            if self.nu is None:
                raise ValueError("a perturbed metric must declare its decay rate nu")
            if not self.nu > 2.0 * self.alpha.alpha:
                raise ValueError(
                    f"declared decay nu = {self.nu} must exceed 2*alpha = "
                    f"{2.0 * self.alpha.alpha}"
                )

    @property
    def is_round(self):
        return self.mu is None

    def _mu_value(self, r, theta):
        if self.mu is None:
            return np.zeros_like(r)
        return self.mu.value(r, theta)

    def rho(self, w):
        """Conformal factor at target points w (none may be the cone point)."""
        r, theta = polar_parts(w)
        if np.any(r == 0.0):
            raise ZeroInput("metric evaluated at the cone point")
        a = self.alpha.alpha
        return self.c * np.exp(2.0 * self._mu_value(r, theta)) * r ** (2.0 * (a - 1.0))

    def mu_u(self, w):
        """d mu / du by the chain rule from b-derivatives."""
        r, theta = polar_parts(w)
        if self.mu is None:
            return np.zeros_like(w, dtype=complex)
        mt = self.mu.dt(r, theta)
        mth = self.mu.dtheta(r, theta)
        return np.exp(-1j * theta) / (2.0 * r) * (mt - 1j * mth)

    def mu_uubar(self, w):
        """d^2 mu / du dubar = (mu_tt + mu_thth) / (4 r^2)."""
        r, theta = polar_parts(w)
        if self.mu is None:
            return np.zeros_like(w, dtype=complex)
        return (self.mu.dtt(r, theta) + self.mu.dthetatheta(r, theta)) / (4.0 * r**2)

    def mu_uu(self, w):
        """d^2 mu / du^2 by the chain rule from b-derivatives."""
        r, theta = polar_parts(w)
        if self.mu is None:
            return np.zeros_like(w, dtype=complex)
        mt = self.mu.dt(r, theta)
        mth = self.mu.dtheta(r, theta)
        mtt = self.mu.dtt(r, theta)
        mtth = self.mu.dttheta(r, theta)
        mthth = self.mu.dthetatheta(r, theta)
        return (
            np.exp(-2j * theta)
            / (4.0 * r**2)
            * (mtt - 2.0 * mt - mthth - 2j * mtth + 2j * mth)
        )

    def dlog_rho_du(self, w):
        """Gamma(u) = d log rho / du = 2 mu_u + (alpha - 1)/u."""
        w = np.asarray(w, dtype=complex)
        if np.any(w == 0.0):
            raise ZeroInput("metric connection evaluated at the cone point")
        a = self.alpha.alpha
        return 2.0 * self.mu_u(w) + (a - 1.0) / w

    def curvature(self, w):
        """Gauss curvature -(1/c) e^(-2 mu) r^(-2 alpha) (mu_tt + mu_thth)."""
        r, theta = polar_parts(w)
        if np.any(r == 0.0):
            raise ZeroInput("curvature evaluated at the cone point")
        if self.mu is None:
            return np.zeros_like(r)
        a = self.alpha.alpha
        lap_b = self.mu.dtt(r, theta) + self.mu.dthetatheta(r, theta)
        return -np.exp(-2.0 * self.mu.value(r, theta)) * r ** (-2.0 * a) * lap_b / self.c


def round_cone_metric(alpha, c=1.0):
    """The unperturbed cone |u|^(2(alpha-1)) |du|^2 of angle 2*pi*alpha."""
    return ConicMetric(alpha=ConeAngleSpec(_as_alpha(alpha)), c=c, mu=None)


# ---------------------------------------------------------------------------
# wedge chart


def wedge_coordinates(z, alpha):
    """Flatten the cone: z -> z^alpha / alpha, branch theta in [0, 2*pi).

    The image of the unit disc is a sector of radius 1/alpha and opening
    angle 2*pi*alpha in which the round-cone metric is Euclidean.
    """
    a = _as_alpha(alpha)
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0.0):
        raise ZeroInput("wedge chart is singular at the cone point")
    return branch_power(z, a) / a


def unwedge(z_tilde, alpha):
    """Inverse of wedge_coordinates with the same branch convention."""
    a = _as_alpha(alpha)
    z_tilde = np.asarray(z_tilde, dtype=complex)
    if np.any(z_tilde == 0.0):
        raise ZeroInput("wedge chart is singular at the cone point")
    return branch_power(a * z_tilde, 1.0 / a)


# ---------------------------------------------------------------------------
# finite-difference machinery


def fornberg_weights(x0, x, m):
    """Weights of the order-m derivative at x0 from nodes x (Fornberg).

    Args:
        x0: evaluation point.
        x: 1d array of distinct nodes.
        m: derivative order >= 0.

    Returns:
        1d array w with sum_j w[j] f(x[j]) ~ f^(m)(x0), exact on
        polynomials of degree len(x) - 1.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    c = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def _spectral_theta_apply(f, order):
    """Differentiate along the last axis, 2*pi-periodic, by FFT."""
    f = np.asarray(f)
    n = f.shape[-1]
    k = np.fft.fftfreq(n, d=1.0 / n)
    if order == 1:
        mult = 1j * k
        if n % 2 == 0:
            mult[n // 2] = 0.0  # Nyquist mode has no well-defined odd derivative
    elif order == 2:
        mult = -(k**2)
    else:
        raise ValueError(f"theta derivative order must be 1 or 2, got {order}")
    out = np.fft.ifft(np.fft.fft(f, axis=-1) * mult, axis=-1)
    if np.isrealobj(f):
        return out.real
    return out


@dataclass(eq=False)
class BGrid:
    """Log-polar tensor grid on the annulus r_outer*e^t_min <= r <= r_outer.

    t = log(r / r_outer) runs over n_t uniform nodes in [t_min, 0] and theta
    over n_theta uniform nodes in [0, 2*pi). Fields live on arrays of shape
    (n_t, n_theta), index [i, k] at (t_i, theta_k).
    """

    t_min: float
    n_t: int
    n_theta: int
    r_outer: float = 1.0

    def __post_init__(self):
        if not self.t_min < 0:
            raise ValueError(f"t_min must be negative, got {self.t_min}")
        if self.n_t < 8 or self.n_theta < 8:
            raise ValueError("need at least 8 nodes in each direction")
        if self.r_outer <= 0:
            raise ValueError(f"r_outer must be positive, got {self.r_outer}")

    # -- node coordinates ---------------------------------------------------

    @cached_property
    def t(self):
        return np.linspace(self.t_min, 0.0, self.n_t)

    @cached_property
    def theta(self):
        return np.arange(self.n_theta) * self.h_theta

    @property
    def h_t(self):
        return abs(self.t_min) / (self.n_t - 1)

    @property
    def h_theta(self):
        return 2.0 * np.pi / self.n_theta

    @cached_property
    def r(self):
        return self.r_outer * np.exp(self.t)

    @cached_property
    def tmesh(self):
        return np.broadcast_to(self.t[:, None], self.shape)

    @cached_property
    def thmesh(self):
        return np.broadcast_to(self.theta[None, :], self.shape)

    @cached_property
    def rmesh(self):
        return np.broadcast_to(self.r[:, None], self.shape)

    @cached_property
    def z(self):
        return self.rmesh * np.exp(1j * self.thmesh)

    @property
    def shape(self):
        return (self.n_t, self.n_theta)

    def nearest_row(self, r0):
        """Index of the grid radius closest to r0."""
        return int(np.argmin(np.abs(self.r - r0)))

    def interior_rows(self, margin=2):
        """Slice of rows unaffected by one-sided stencil edge rows."""
        return slice(margin, self.n_t - margin)

    # -- differentiation ----------------------------------------------------

    def diff_t_matrix(self, order):
        """Sparse n_t x n_t matrix of the order-(1|2) d/dt, 4th order.

        Interior rows are 5-point centered; edge rows are one-sided with
        enough nodes (5 for order 1, 6 for order 2) to stay 4th order.
        """
        if order not in (1, 2):
            raise ValueError(f"t derivative order must be 1 or 2, got {order}")
        key = ("_dt", order)
        cached = self.__dict__.get(key)
        if cached is not None:
            return cached
        n = self.n_t
        width = 5 if order == 1 else 6
        mat = sp.lil_matrix((n, n))
        for i in range(n):
            if 2 <= i <= n - 3:
                idx = np.arange(i - 2, i + 3)
            elif i < 2:
                idx = np.arange(width)
            else:
                idx = np.arange(n - width, n)
            mat[i, idx] = fornberg_weights(self.t[i], self.t[idx], order)
        mat = mat.tocsr()
        self.__dict__[key] = mat
        return mat

    def theta_diff_matrix(self, order):
        """Dense n_theta x n_theta spectral differentiation matrix.

        Built column-by-column from the FFT rule so that matrix assembly and
        FFT application agree to rounding.
        """
        key = ("_dth", order)
        cached = self.__dict__.get(key)
        if cached is not None:
            return cached
        rows = _spectral_theta_apply(np.eye(self.n_theta), order)
        mat = np.ascontiguousarray(rows.T)
        self.__dict__[key] = mat
        return mat

    def d_t(self, f, order=1):
        """d^order f / dt^order along axis 0."""
        return self.diff_t_matrix(order) @ np.asarray(f)

    def d_theta(self, f, order=1):
        """d^order f / dtheta^order along axis 1 (spectral)."""
        return _spectral_theta_apply(f, order)

    def laplacian_b(self, f):
        """f_tt + f_thth; divide by r^2 for the flat Laplacian."""
        return self.d_t(f, 2) + self.d_theta(f, 2)

    # -- quadrature ---------------------------------------------------------

    def integrate(self, f, rows=None):
        """Integral of f(t, theta) dt dtheta over the grid (or a row window).

        Trapezoid in theta (exact for resolved trigonometric polynomials),
        Simpson in t. `rows` is an inclusive (i_lo, i_hi) pair.
        """
        f = np.asarray(f)
        if rows is None:
            i0, i1 = 0, self.n_t - 1
        else:
            i0, i1 = rows
        ring = f[i0 : i1 + 1].sum(axis=1) * self.h_theta
        return simpson(ring, x=self.t[i0 : i1 + 1])


def row_window(grid, r_lo, r_hi):
    """Inclusive row index range covering grid radii in [r_lo, r_hi]."""
    mask = (grid.r >= r_lo) & (grid.r <= r_hi)
    idx = np.nonzero(mask)[0]
    if len(idx) == 0:
        raise ValueError(f"no grid rows in radius window [{r_lo}, {r_hi}]")
    return int(idx[0]), int(idx[-1])


# ---------------------------------------------------------------------------
# curvature from samples or bundles


def gauss_curvature(metric, grid, mu_samples=None, coarseness_tol=0.25):
    """Gauss curvature field of a conic metric on the grid nodes.

    Args:
        metric: ConicMetric; its mu bundle is used when mu_samples is None.
        grid: BGrid carrying the evaluation nodes.
        mu_samples: optional (n_t, n_theta) array of mu values; second
            differences are then taken with grid stencils.
        coarseness_tol: with sampled mu, the 4th- and 2nd-order Laplacian
            estimates must agree to this relative sup tolerance, else the
            grid cannot be trusted for second differences.

    Returns:
        Real (n_t, n_theta) array of curvature values.

    Raises:
        InsufficientRegularity: sampled mu too coarse for second differences.
    """
    a = metric.alpha.alpha
    if mu_samples is None:
        if metric.mu is None:
            return np.zeros(grid.shape)
        return metric.curvature(grid.z).real

    mu_samples = np.asarray(mu_samples, dtype=float)
    if mu_samples.shape != grid.shape:
        raise ValueError("mu_samples shape does not match the grid")
    lap4 = grid.laplacian_b(mu_samples)
    # 2nd-order check Laplacian: disagreement flags unresolved second differences
    lap2_t = (np.roll(mu_samples, -1, 0) - 2 * mu_samples + np.roll(mu_samples, 1, 0)) / grid.h_t**2
    lap2_th = (
        np.roll(mu_samples, -1, 1) - 2 * mu_samples + np.roll(mu_samples, 1, 1)
    ) / grid.h_theta**2
    lap2 = lap2_t + lap2_th
    inner = grid.interior_rows()
    scale = max(np.max(np.abs(lap4[inner])), 1e-14)
    gap = np.max(np.abs(lap4[inner] - lap2[inner]))
    if gap > coarseness_tol * scale:
        raise InsufficientRegularity(
            f"sampled mu second differences disagree across stencil orders "
            f"(relative gap {gap / scale:.2e}); refine the grid"
        )
    weight = np.exp(-2.0 * mu_samples) * grid.rmesh ** (-2.0 * a) / metric.c
    return -weight * lap4


def brioschi_curvature(E, F, G, grid):
    """Gauss curvature of E dt^2 + 2 F dt dtheta + G dtheta^2 on the grid.

    All derivatives are grid derivatives in (t, theta). Returns the curvature
    field; accuracy degrades on the stencil edge rows as usual.
    """
    dt = grid.d_t
    dth = grid.d_theta
    E_t, E_th = dt(E), dth(E)
    G_t, G_th = dt(G), dth(G)
    F_t, F_th = dt(F), dth(F)
    E_thth = dth(E, 2)
    G_tt = dt(G, 2)
    F_tth = dth(F_t)

    # det of [[a11, .5E_t, F_t-.5E_th], [F_th-.5G_t, E, F], [.5G_th, F, G]]
    a11 = -0.5 * E_thth + F_tth - 0.5 * G_tt
    det1 = (
        a11 * (E * G - F * F)
        - 0.5 * E_t * ((F_th - 0.5 * G_t) * G - F * 0.5 * G_th)
        + (F_t - 0.5 * E_th) * ((F_th - 0.5 * G_t) * F - E * 0.5 * G_th)
    )
    det2 = (
        0.0 * (E * G - F * F)
        - 0.5 * E_th * (0.5 * E_th * G - F * 0.5 * G_t)
        + 0.5 * G_t * (0.5 * E_th * F - E * 0.5 * G_t)
    )
    denom = (E * G - F * F) ** 2
    return (det1 - det2) / denom


# ---------------------------------------------------------------------------
# weighted b-norms


@dataclass(frozen=True)
class WeightedNormSpec:
    """Parameters of the weighted norm sup |r^-c D^(i,j) f|, i+j <= k.

    holder_gamma, when set, adds a sampled Hoelder seminorm of the top-order
    derivatives over nearest-neighbor node pairs with the anisotropic modulus
    |dtheta|^gamma + |dr|^gamma / (r + r')^gamma. On smooth data the sampled
    seminorm underestimates the continuum one (differences shrink like h,
    the modulus only like h^gamma); its exact scaling behavior is what the
    package relies on.
    """

    weight_c: float
    order_k: int = 0
    holder_gamma: float = None

    def __post_init__(self):
        if self.order_k not in (0, 1, 2):
            raise ValueError(f"order_k must be 0, 1, or 2, got {self.order_k}")
        if self.holder_gamma is not None and not 0.0 < self.holder_gamma < 1.0:
            raise ValueError("holder_gamma must lie in (0, 1)")


def _b_derivatives(f, grid, k):
    """All (i, j) b-derivatives with i + j <= k, as a dict."""
    out = {(0, 0): np.asarray(f)}
    if k >= 1:
        out[(1, 0)] = grid.d_t(f)
        out[(0, 1)] = grid.d_theta(f)
    if k >= 2:
        out[(2, 0)] = grid.d_t(f, 2)
        out[(0, 2)] = grid.d_theta(f, 2)
        out[(1, 1)] = grid.d_theta(out[(1, 0)])
    return out


def weighted_b_norm(f, grid, spec):
    """Weighted b-norm of a field: sum of weighted sups, plus Hoelder part.

    Args:
        f: (n_t, n_theta) field, real or complex.
        grid: BGrid the samples live on.
        spec: WeightedNormSpec with weight c, order k, optional gamma.

    Returns:
        float norm value. Scales exactly like r_outer^(-c) under the
        sample-preserving rescalings produced by rescale_probe.
    """
    c = spec.weight_c
    derivs = _b_derivatives(f, grid, spec.order_k)
    w = grid.rmesh ** (-c)
    total = sum(np.max(np.abs(w * d)) for d in derivs.values())

    if spec.holder_gamma is not None:
        g = spec.holder_gamma
        top = [d for (i, j), d in derivs.items() if i + j == spec.order_k]
        r = grid.rmesh
        best = 0.0
        for d in top:
            # adjacent pair in t: modulus |dr|^g / (r + r')^g
            diff = np.abs(d[1:] - d[:-1])
            mod = (np.abs(r[1:] - r[:-1]) / (r[1:] + r[:-1])) ** g
            wt = np.minimum(r[1:], r[:-1]) ** (-c)
            best = max(best, np.max(wt * diff / mod))
            # adjacent pair in theta: modulus h_theta^g, same radius
            diff = np.abs(np.roll(d, -1, 1) - d)
            best = max(best, np.max(r ** (-c) * diff) / grid.h_theta**g)
        total += best
    return float(total)
