"""Heat evolution of radial profiles and the thermic Besov machinery.

The heat kernel acting on radial profiles reduces to a 1-D integral operator

    (e^{t Lap} f)(r) = int_0^inf f(rho) G_t(r, rho) rho^(n-1) drho,

where G_t is the spherical average of the Gaussian kernel.  That angular
average has a closed form in terms of scaled modified Bessel functions,

    G_t(r, rho) = (4 pi t)^(-n/2) |S^(n-2)| sqrt(pi) Gamma((n-1)/2)
                  * (2/x)^nu I_nu(x) e^(-x) * exp(-(r-rho)^2 / 4t),

with x = r rho / (2t) and nu = (n-2)/2, which is what the default kernel
builder evaluates (a Gauss-Legendre builder is kept for convergence gating).

Resolution envelope: the kernel ridge has width sqrt(2t)/r in log radius, so
a row r can only be resolved by the quadrature when t >= (r*Delta)^2.  Below
that threshold ``heat_apply`` switches the row to the two-term expansion
f + t*Lap f, which is exact for constants and accurate whenever f itself is
resolved by the grid.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray
from scipy import special

from .params import Check, ValidationReport
from .radial import RadialFunction, RadialGrid, apply_laplacian, radial_gradient, weighted_lp_norm

__all__ = [
    "KernelMatrix",
    "BesovResult",
    "DecayReport",
    "TailReport",
    "EndpointWarning",
    "heat_profile",
    "heat_kernel_matrix",
    "heat_apply",
    "heat_apply_values",
    "besov_norm",
    "besov_norms_batch",
    "default_besov_t_grid",
    "log_t_grid",
    "heat_decay_report",
    "tail_decay_report",
]


class EndpointWarning(UserWarning):
    """A supremum over a truncated time grid was attained at an endpoint."""


@dataclass(eq=False)
class KernelMatrix:
    """Discretized radial integral operator.

    ``raw`` holds the kernel values with respect to the measure
    rho^(n-1) drho (symmetric for heat and Riesz kinds); ``entries`` folds in
    the quadrature weights and maps profile values to profile values.
    """

    kind: str
    grid: RadialGrid
    params: dict
    raw: NDArray[np.float64]
    _entries: NDArray[np.float64] | None = field(default=None, repr=False)

    @property
    def entries(self) -> NDArray[np.float64]:
        if self._entries is None:
            self._entries = self.raw * self.grid.quad_weights[None, :]
        return self._entries

    def apply_values(self, values: NDArray) -> NDArray:
        return self.entries @ values

    def apply(self, f: RadialFunction) -> RadialFunction:
        return RadialFunction(self.grid, self.entries @ f.values, f.dropped_mass)


def heat_profile(grid: RadialGrid, t: float) -> RadialFunction:
    """The Gaussian heat kernel profile h_t sampled on the grid."""
    if t <= 0:
        raise ValueError(f"time must be positive, got {t}")
    v = (4.0 * np.pi * t) ** (-grid.n / 2.0) * np.exp(-grid.r**2 / (4.0 * t))
    return RadialFunction(grid, v)


def _bessel_factor(nu: float, x: NDArray) -> NDArray:
    """(2/x)^nu I_nu(x) e^(-x), stable for all x >= 0."""
    out = np.empty_like(x)
    small = x < 0.25
    huge = x > 1e8  # scipy's ive fails near 1e9; use the asymptotic series
    mid = ~small & ~huge
    xs = x[small]
    term = np.ones_like(xs) / special.gamma(nu + 1.0)
    acc = term.copy()
    x2 = xs * xs / 4.0
    for k in range(1, 9):
        term = term * x2 / (k * (nu + k))
        acc += term
    out[small] = acc * np.exp(-xs)
    xm = x[mid]
    out[mid] = (2.0 / xm) ** nu * special.ive(nu, xm)
    xh = x[huge]
    mu = 4.0 * nu * nu
    asym = (1.0 - (mu - 1.0) / (8.0 * xh)
            + (mu - 1.0) * (mu - 9.0) / (128.0 * xh * xh))
    out[huge] = (2.0 / xh) ** nu * asym / np.sqrt(2.0 * np.pi * xh)
    return out


def _heat_raw_exact(grid: RadialGrid, t: float) -> NDArray:
    n, r = grid.n, grid.r
    nu = (n - 2) / 2.0
    s_n2 = 2.0 * np.pi ** ((n - 1) / 2.0) / special.gamma((n - 1) / 2.0)
    pref = (4.0 * np.pi * t) ** (-n / 2.0) * s_n2 * np.sqrt(np.pi) * special.gamma((n - 1) / 2.0)
    dd = (r[:, None] - r[None, :]) ** 2 / (4.0 * t)
    raw = np.zeros((grid.N, grid.N))
    mask = dd < 745.0
    if mask.any():
        x = (r[:, None] * r[None, :])[mask] / (2.0 * t)
        raw[mask] = pref * _bessel_factor(nu, x) * np.exp(-dd[mask])
    return raw


def _heat_raw_gl(grid: RadialGrid, t: float, nodes: int) -> NDArray:
    n, r, N = grid.n, grid.r, grid.N
    s_n2 = 2.0 * np.pi ** ((n - 1) / 2.0) / special.gamma((n - 1) / 2.0)
    pref = (4.0 * np.pi * t) ** (-n / 2.0) * s_n2
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    raw = np.empty((N, N))
    chunk = max(1, (1 << 22) // (N * nodes))
    for i0 in range(0, N, chunk):
        ri = r[i0 : i0 + chunk, None]
        rr = ri * r[None, :]
        aa = ri**2 + r[None, :] ** 2
        # restrict to the angular range where the integrand is non-negligible
        cut = np.arccos(1.0 - np.minimum(2.0, 72.0 * t / rr))
        theta = 0.5 * cut[..., None] * (xg + 1.0)
        w = 0.5 * cut[..., None] * wg
        expo = -(aa[..., None] - 2.0 * rr[..., None] * np.cos(theta)) / (4.0 * t)
        integ = np.exp(expo) * np.sin(theta) ** (n - 2) * w
        raw[i0 : i0 + chunk] = pref * integ.sum(axis=-1)
    return raw


def heat_kernel_matrix(grid: RadialGrid, t: float, method: str = "exact",
                       nodes: int = 64) -> KernelMatrix:
    """Heat kernel matrix at time t.

    method="exact" evaluates the angular integral in closed (Bessel) form;
    method="gl" uses Gauss-Legendre with the given node count and exists for
    convergence gating.
    """
    if t <= 0:
        raise ValueError(f"time must be positive, got {t}")
    if method == "exact":
        raw = _heat_raw_exact(grid, t)
    elif method == "gl":
        raw = _heat_raw_gl(grid, t, nodes)
    else:
        raise ValueError(f"unknown method {method!r}")
    return KernelMatrix("heat", grid, {"t": t, "method": method}, raw)


def resolution_threshold(grid: RadialGrid) -> NDArray:
    """Per-node smallest time the kernel quadrature can resolve, (r*Delta)^2."""
    return (grid.r * grid.delta) ** 2


def heat_apply_values(values: NDArray, grid: RadialGrid, t: float,
                      pure_matrix: bool = False,
                      kernel: KernelMatrix | None = None,
                      lap: NDArray | None = None) -> NDArray:
    """Heat evolution of one profile (shape (N,)) or a stack (shape (N, M))."""
    if kernel is None:
        kernel = heat_kernel_matrix(grid, t)
    out = kernel.apply_values(values)
    if not pure_matrix:
        rows = t < resolution_threshold(grid)
        if rows.any():
            if lap is None:
                lap = apply_laplacian(np.asarray(values, dtype=float).T, grid).T
            out[rows] = values[rows] + t * lap[rows]
    return out


def heat_apply(f: RadialFunction, t: float, pure_matrix: bool = False) -> RadialFunction:
    """e^{t Lap} f on the grid.  t must be positive.

    Mass is conserved to ~1e-6 for integrable profiles; rows below the
    resolution envelope use the local expansion (see module docstring).
    """
    if t <= 0:
        raise ValueError(f"time must be positive, got {t}")
    out = heat_apply_values(f.values, f.grid, t, pure_matrix=pure_matrix)
    return RadialFunction(f.grid, out, f.dropped_mass)


def log_t_grid(t_min: float, t_max: float, per_decade: int) -> NDArray:
    """Log-spaced time grid with the given points-per-decade density."""
    if not (0 < t_min < t_max):
        raise ValueError("need 0 < t_min < t_max")
    decades = np.log10(t_max / t_min)
    npts = int(round(decades * per_decade)) + 1
    return np.geomspace(t_min, t_max, npts)


def default_besov_t_grid() -> NDArray:
    return log_t_grid(1e-4, 1e4, 60)


class BesovResult(NamedTuple):
    value: float
    argmax_t: float
    endpoint_flag: bool


def besov_norms_batch(values: NDArray, grid: RadialGrid, delta: float,
                      t_grid: NDArray) -> tuple[NDArray, NDArray, NDArray]:
    """sup_t t^(delta/2) ||e^{t Lap} f||_inf for a stack of profiles.

    ``values`` has shape (N, M), one profile per column.  Returns
    (norms, argmax times, endpoint flags), each of length M.
    """
    V = np.asarray(values, dtype=float)
    single = V.ndim == 1
    if single:
        V = V[:, None]
    lap = apply_laplacian(V.T, grid).T
    best = np.full(V.shape[1], -np.inf)
    best_idx = np.zeros(V.shape[1], dtype=int)
    for idx, t in enumerate(t_grid):
        W = heat_apply_values(V, grid, t, lap=lap)
        cand = t ** (delta / 2.0) * np.max(np.abs(W), axis=0)
        upd = cand > best
        best[upd] = cand[upd]
        best_idx[upd] = idx
    norms = np.where(best > -np.inf, best, 0.0)
    argmax = t_grid[best_idx]
    endpoint = (best_idx == 0) | (best_idx == len(t_grid) - 1)
    zero = norms == 0.0
    endpoint[zero] = False
    argmax = np.where(zero, np.nan, argmax)
    return norms, argmax, endpoint


def besov_norm(f: RadialFunction, delta: float,
               t_grid: NDArray | None = None) -> BesovResult:
    """Thermic Besov norm of smoothness -delta: sup_t t^(delta/2) ||e^{tL}f||_inf.

    The sup is over the given time grid; if it is attained at a grid endpoint
    the result is flagged and an EndpointWarning is emitted (the true sup over
    t > 0 is then not bracketed).
    """
    if delta <= 0:
        raise ValueError(f"smoothness delta must be positive, got {delta}")
    if t_grid is None:
        t_grid = default_besov_t_grid()
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0:
        raise ValueError("t_grid must be nonempty")
    norms, argmax, endpoint = besov_norms_batch(f.values, f.grid, delta, t_grid)
    if endpoint[0]:
        warnings.warn(
            f"Besov sup attained at t-grid endpoint t={argmax[0]:.3e}; "
            "the supremum over t > 0 is not bracketed",
            EndpointWarning,
            stacklevel=2,
        )
    return BesovResult(float(norms[0]), float(argmax[0]), bool(endpoint[0]))


@dataclass
class DecayReport:
    """C(t) table for the weighted heat-decay estimate."""

    t: NDArray
    C: NDArray
    sup: float
    argmax_t: float
    exponent: float
    deriv_order: int
    zero_input: bool = False

    def rows(self):
        return list(zip(self.t, self.C))


def _heat_decay_conditions(n, p, q, alpha, beta, deriv_order):
    nq = 0.0 if np.isinf(q) else n / q
    relaxed = (p == 1) or np.isinf(q)
    if np.isinf(q):
        c1 = Check("beta > -n/q", beta >= 0.0, abs(beta) <= 1e-12,
                   f"beta={beta} (q=inf: beta >= 0)")
    else:
        c1 = Check("beta > -n/q", beta > -nq, abs(beta + nq) <= 1e-12,
                   f"beta={beta}, -n/q={-nq}")
    npp = n * (1.0 - 1.0 / p)
    c2 = Check("alpha < n/p'", alpha < npp, abs(alpha - npp) <= 1e-12,
               f"alpha={alpha}, n/p'={npp}")
    if relaxed:
        c3 = Check("alpha >= beta", alpha > beta, abs(alpha - beta) <= 1e-12,
                   "strict alpha > beta required in the relaxed index range")
    else:
        c3 = Check("alpha >= beta", alpha >= beta, abs(alpha - beta) <= 1e-12,
                   f"alpha={alpha}, beta={beta}")
    e = deriv_order + n / p - nq + alpha - beta
    c4 = Check("eta + n/p - n/q + alpha - beta >= 0", e >= 0.0,
               abs(e) <= 1e-12, f"exponent={e}")
    c5 = Check("deriv order in {0, 1}", deriv_order in (0, 1),
               detail=f"eta={deriv_order}")
    return ValidationReport("heat_decay", (c1, c2, c3, c4, c5), {"exponent": e})


def heat_decay_report(f: RadialFunction, p: float, q: float, alpha: float,
                      beta: float, deriv_order: int = 0,
                      t_grid: NDArray | None = None) -> DecayReport:
    """Table of C(t) = t^(e/2) || |x|^beta D^eta e^{tL} f ||_q / || |x|^alpha f ||_p
    with e = eta + n/p - n/q + alpha - beta; the estimate asserts sup_t C < inf.
    """
    grid = f.grid
    report = _heat_decay_conditions(grid.n, p, q, alpha, beta, deriv_order)
    report.raise_if_failed("heat_decay_report")
    e = report.extra["exponent"]
    if t_grid is None:
        t_grid = log_t_grid(1e-3, 1e3, 10)
    norm_f = weighted_lp_norm(f, p, alpha)
    if norm_f == 0.0:
        return DecayReport(np.array([]), np.array([]), 0.0, np.nan, e,
                           deriv_order, zero_input=True)
    C = np.empty(len(t_grid))
    for i, t in enumerate(t_grid):
        v = heat_apply(f, t)
        if deriv_order == 1:
            v = radial_gradient(v)
        C[i] = t ** (e / 2.0) * weighted_lp_norm(v, q, beta) / norm_f
    k = int(np.argmax(C))
    return DecayReport(np.asarray(t_grid, dtype=float), C, float(C[k]),
                       float(t_grid[k]), e, deriv_order)


@dataclass
class TailReport:
    """Fitted tail-decay slope of an evolved profile."""

    k: NDArray
    tail_sup: NDArray
    slope: float
    bound: float
    passed: bool
    zero_input: bool = False

    def rows(self):
        return list(zip(self.k, self.tail_sup))


def tail_decay_report(f: RadialFunction, t: float, alpha: float, p: float,
                      delta: float, k_grid) -> TailReport:
    """Fit the slope of log sup_{|x|>k} |e^{tL} f| against log k.

    The compactness estimate guarantees decay at least k^(-delta) for
    0 < delta < alpha < n/p'; steeper decay passes.
    """
    grid = f.grid
    npp = grid.n * (1.0 - 1.0 / p)
    checks = (
        Check("0 < delta < alpha", 0.0 < delta < alpha,
              abs(delta) <= 1e-12 or abs(delta - alpha) <= 1e-12,
              f"delta={delta}, alpha={alpha}"),
        Check("alpha < n/p'", alpha < npp, abs(alpha - npp) <= 1e-12,
              f"alpha={alpha}, n/p'={npp}"),
    )
    ValidationReport("tail_decay", checks).raise_if_failed("tail_decay_report")
    k_grid = np.asarray(k_grid, dtype=float)
    if np.any(k_grid < grid.r_min) or np.any(k_grid >= grid.r_max):
        raise ValueError("k_grid outside the grid support")
    bound = -delta * (1.0 - 0.02)
    if not np.any(f.values):
        return TailReport(k_grid, np.zeros_like(k_grid), np.nan, bound,
                          False, zero_input=True)
    v = np.abs(heat_apply(f, t).values)
    tail = np.array([v[grid.r > k].max() for k in k_grid])
    keep = tail > 10.0 * np.finfo(float).eps * tail.max()
    if keep.sum() < 2:
        raise ValueError("tail is numerically zero on the requested k_grid")
    slope = float(np.polyfit(np.log(k_grid[keep]), np.log(tail[keep]), 1)[0])
    return TailReport(k_grid, tail, slope, bound, slope <= bound)
