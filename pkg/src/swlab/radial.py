"""Logarithmic radial grids and the basic operations on radial profiles.

Every function of x in R^n handled by this package is radial and lives on a
log-uniform grid r_i = r_min * exp(i*Delta).  Quadrature is the trapezoid
rule in log coordinates, with the Jacobian rho^n * Delta folded into the
weights, so that

    sum_i w_i g(r_i)  ~  integral_0^inf g(rho) rho^(n-1) drho.

The log grid makes dilations exact index shifts, which turns the scaling
identities of weighted norms into machine-testable statements.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy import special

__all__ = [
    "RadialGrid",
    "RadialFunction",
    "BoundaryWarning",
    "DroppedMassWarning",
    "make_grid",
    "integrate",
    "weighted_lp_norm",
    "dilate",
    "radial_gradient",
    "hl_maximal",
    "MaximalOperator",
    "cap_measure",
    "sphere_area",
    "ball_volume",
    "save_profile",
    "load_profile",
]

DROPPED_MASS_TOL = 1e-6
BOUNDARY_TOL = 1e-6


class BoundaryWarning(UserWarning):
    """A weighted integral is dominated by the grid boundary."""


class DroppedMassWarning(UserWarning):
    """A dilation rolled a non-negligible mass fraction off the grid."""


def sphere_area(n: int) -> float:
    """Surface measure |S^(n-1)| = 2 pi^(n/2) / Gamma(n/2)."""
    return 2.0 * np.pi ** (n / 2.0) / special.gamma(n / 2.0)


def ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n."""
    return np.pi ** (n / 2.0) / special.gamma(n / 2.0 + 1.0)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Log-uniform radial discretization of (0, inf) for profiles on R^n.

    Attributes:
        n: spatial dimension (>= 2).
        r_min, r_max: grid end radii.
        N: node count.
        delta: log spacing, ln(r_max/r_min) / (N-1).
        r: nodes r_i = r_min * exp(i*delta).
        quad_weights: trapezoid weights realizing the rho^(n-1) drho measure.
    """

    n: int
    r_min: float
    r_max: float
    N: int
    delta: float = field(init=False)
    r: NDArray[np.float64] = field(init=False, repr=False)
    quad_weights: NDArray[np.float64] = field(init=False, repr=False)

    def __post_init__(self):
        delta = np.log(self.r_max / self.r_min) / (self.N - 1)
        r = self.r_min * np.exp(delta * np.arange(self.N))
        w = delta * r ** self.n
        w[0] *= 0.5
        w[-1] *= 0.5
        r.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "delta", float(delta))
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "quad_weights", w)

    @property
    def sphere_area(self) -> float:
        return sphere_area(self.n)

    def cell_edges(self) -> tuple[NDArray, NDArray]:
        """Lower/upper edges of the quadrature cells (half cells at the ends)."""
        lo = self.r * np.exp(-0.5 * self.delta)
        hi = self.r * np.exp(0.5 * self.delta)
        lo[0] = self.r_min
        hi[-1] = self.r_max
        return lo, hi

    def key(self) -> tuple:
        """Hashable identity used for kernel caching."""
        return (self.n, float(self.r_min), float(self.r_max), self.N)


@dataclass(frozen=True, eq=False)
class RadialFunction:
    """A radial profile sampled on a RadialGrid.

    ``dropped_mass`` records the |f|-mass fraction lost to off-grid shifts by
    :func:`dilate`; fresh profiles carry 0.
    """

    grid: RadialGrid
    values: NDArray[np.float64]
    dropped_mass: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.N,):
            raise ValueError(
                f"profile has {values.shape} values for a grid of {self.grid.N} nodes"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("profile values must be finite")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def mass_warning(self) -> bool:
        return self.dropped_mass > DROPPED_MASS_TOL

    def with_values(self, values, dropped_mass=None) -> "RadialFunction":
        dm = self.dropped_mass if dropped_mass is None else dropped_mass
        return RadialFunction(self.grid, values, dm)


def make_grid(n: int, r_min: float, r_max: float, N: int) -> RadialGrid:
    """Build a log-uniform RadialGrid, rejecting degenerate inputs."""
    if int(n) != n or n < 2:
        raise ValueError(f"dimension n must be an integer >= 2, got {n}")
    if not (0 < r_min < r_max):
        raise ValueError(f"need 0 < r_min < r_max, got ({r_min}, {r_max})")
    if int(N) != N or N < 16:
        raise ValueError(f"node count N must be an integer >= 16, got {N}")
    return RadialGrid(int(n), float(r_min), float(r_max), int(N))


def integrate(f: RadialFunction) -> float:
    """Full R^n integral of the radial extension of f."""
    g = f.grid
    return g.sphere_area * float(g.quad_weights @ f.values)


def weighted_lp_norm(f: RadialFunction, p: float, a: float = 0.0) -> float:
    """Weighted Lebesgue norm || |x|^a f ||_{L^p(R^n)}.

    For p = inf the norm is the grid supremum of |f(r)| r^a (which
    under-estimates the true sup between nodes).  Emits BoundaryWarning when
    the first/last node carry more than 1e-6 of the integral, i.e. when the
    weight is not integrable against f on the grid range.
    """
    if p < 1:
        raise ValueError(f"Lebesgue exponent p must be >= 1, got {p}")
    g = f.grid
    if np.isinf(p):
        return float(np.max(np.abs(f.values) * g.r ** a))
    contrib = g.quad_weights * np.abs(f.values) ** p * g.r ** (a * p)
    total = float(contrib.sum())
    if total > 0.0 and (contrib[0] + contrib[-1]) > BOUNDARY_TOL * total:
        warnings.warn(
            f"boundary nodes carry {(contrib[0] + contrib[-1]) / total:.2e} "
            f"of || |x|^{a} f ||_{p}^{p}; weight may not be integrable here",
            BoundaryWarning,
            stacklevel=2,
        )
    return float((g.sphere_area * total) ** (1.0 / p))


def dilate(f: RadialFunction, k: int, a: float) -> RadialFunction:
    """Dilation f_lambda(x) = lambda^a f(lambda x) with lambda = exp(k*Delta).

    On the log grid this is an exact index shift by k plus multiplication by
    lambda^a.  Values rolling off the grid become 0; the dropped |f|-mass
    fraction is recorded on the result and warned about above 1e-6.
    """
    g = f.grid
    k = int(k)
    lam_a = np.exp(k * g.delta * a)
    out = np.zeros(g.N)
    if abs(k) < g.N:
        if k >= 0:
            out[: g.N - k] = f.values[k:]
            unused = slice(0, k)
        else:
            out[-k:] = f.values[: g.N + k]
            unused = slice(g.N + k, g.N)
    else:
        unused = slice(0, g.N)
    out *= lam_a
    mass = g.quad_weights * np.abs(f.values)
    total = float(mass.sum())
    lost = float(mass[unused].sum()) / total if total > 0 else 0.0
    dropped = 1.0 - (1.0 - f.dropped_mass) * (1.0 - lost)
    if lost > DROPPED_MASS_TOL:
        warnings.warn(
            f"dilate(k={k}) dropped {lost:.2e} of the profile mass off-grid",
            DroppedMassWarning,
            stacklevel=2,
        )
    return RadialFunction(g, out, dropped)


def radial_gradient(f: RadialFunction) -> RadialFunction:
    """Radial derivative du/dr by centered differences in log coordinates.

    Interior: (f_{i+1} - f_{i-1}) / (2 Delta r_i); second-order one-sided
    stencils at the two boundary nodes.
    """
    g = f.grid
    v = f.values
    d = np.empty(g.N)
    d[1:-1] = (v[2:] - v[:-2]) / (2.0 * g.delta)
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * g.delta)
    d[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * g.delta)
    return RadialFunction(g, d / g.r, f.dropped_mass)


def laplacian(f: RadialFunction) -> RadialFunction:
    """Radial Laplacian f'' + (n-1) f'/r via log-coordinate stencils.

    The two boundary nodes are set to 0 (they sit in the truncation region).
    """
    g = f.grid
    out = apply_laplacian(f.values, g)
    return RadialFunction(g, out, f.dropped_mass)


def apply_laplacian(values: NDArray, grid: RadialGrid) -> NDArray:
    """Array-level radial Laplacian; accepts (..., N) stacks."""
    v = np.asarray(values, dtype=float)
    d = grid.delta
    out = np.zeros_like(v)
    fy = (v[..., 2:] - v[..., :-2]) / (2.0 * d)
    fyy = (v[..., 2:] - 2.0 * v[..., 1:-1] + v[..., :-2]) / d**2
    out[..., 1:-1] = (fyy + (grid.n - 2) * fy) / grid.r[1:-1] ** 2
    return out


def cap_measure(n: int, r, rho, R) -> NDArray:
    """Angular measure of directions omega with |x - rho*omega| <= R, |x| = r.

    Computes |S^(n-2)| * int_0^theta* sin^(n-2)theta dtheta where
    cos(theta*) = (r^2 + rho^2 - R^2) / (2 r rho), clamped to [-1, 1].
    Broadcasts over array arguments.
    """
    r = np.asarray(r, dtype=float)
    rho = np.asarray(rho, dtype=float)
    c = (r**2 + rho**2 - np.asarray(R, dtype=float) ** 2) / (2.0 * r * rho)
    c = np.clip(c, -1.0, 1.0)
    a = (n - 1) / 2.0
    b_full = np.sqrt(np.pi) * special.gamma((n - 1) / 2.0) / special.gamma(n / 2.0)
    x = np.clip(1.0 - c**2, 0.0, 1.0)
    half = 0.5 * b_full * special.betainc(a, 0.5, x)
    j = np.where(c >= 0.0, half, b_full - half)
    s_n2 = 2.0 * np.pi ** ((n - 1) / 2.0) / special.gamma((n - 1) / 2.0)
    return s_n2 * j


class MaximalOperator:
    """Precomputed ball-average weights for the Hardy-Littlewood maximal
    function of radial profiles over a fixed set of ball radii.

    The average over B(x, R) of a radial profile reduces to a 1-D integral
    against the spherical-cap measure; the discrete average is normalized by
    the quadrature measure of the ball itself, so averages of constants are
    exact.
    """

    def __init__(self, grid: RadialGrid, R_grid):
        R_grid = np.atleast_1d(np.asarray(R_grid, dtype=float))
        if R_grid.size == 0:
            raise ValueError("R_grid must be nonempty")
        if np.any(R_grid <= 0):
            raise ValueError("ball radii must be positive")
        self.grid = grid
        self.R_grid = R_grid
        self._weights = []
        r = grid.r
        for R in R_grid:
            sig = cap_measure(grid.n, r[:, None], r[None, :], R)
            w = sig * grid.quad_weights[None, :]
            w /= w.sum(axis=1, keepdims=True)
            self._weights.append(w)

    def ball_average(self, f: RadialFunction, index: int) -> NDArray:
        """Average of f over balls of radius R_grid[index], per node."""
        return self._weights[index] @ np.abs(f.values)

    def apply(self, f: RadialFunction) -> RadialFunction:
        v = np.abs(f.values)
        out = self._weights[0] @ v
        for w in self._weights[1:]:
            np.maximum(out, w @ v, out=out)
        return RadialFunction(f.grid, out, f.dropped_mass)


def hl_maximal(f: RadialFunction, R_grid) -> RadialFunction:
    """Centered Hardy-Littlewood maximal function over the given ball radii.

    Mf(r_i) = max over R in R_grid of the ball average of |f| on B(x, R).
    """
    return MaximalOperator(f.grid, R_grid).apply(f)


def save_profile(f: RadialFunction, path) -> None:
    """Write a profile as CSV with header r,value at 17 significant digits."""
    with open(path, "w", newline="") as fh:
        fh.write("r,value\n")
        for r, v in zip(f.grid.r, f.values):
            fh.write(f"{r:.17g},{v:.17g}\n")


def load_profile(path, grid: RadialGrid) -> RadialFunction:
    """Read a profile CSV written by save_profile onto a matching grid."""
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns r,value")
    if data.shape[0] != grid.N:
        raise ValueError(f"{path}: {data.shape[0]} rows for a grid of {grid.N} nodes")
    r = data[:, 0]
    if not np.allclose(r, grid.r, rtol=1e-12, atol=0.0):
        raise ValueError(f"{path}: radii do not match the grid")
    return RadialFunction(grid, data[:, 1])
