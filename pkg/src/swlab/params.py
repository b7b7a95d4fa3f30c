"""Exponent bookkeeping: the parameter tuple and per-theorem validators.

Each validator checks one hypothesis set and reports every condition by name,
pass or fail, with no epsilon slack on strict inequalities.  Equality
identities (the scaling balances) are checked to 1e-12 absolute.  A condition
failing exactly at its boundary is tagged ``boundary`` so parameter sweeps can
chart the admissible region.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ParamSet",
    "Check",
    "ValidationReport",
    "ValidationError",
    "MissingFieldsError",
    "DegenerateDerivationError",
    "validate_stein_weiss",
    "validate_improved",
    "validate_ckn",
    "validate_ckn_improved",
    "validate_compact_embedding",
    "validate_maximizer",
    "derive",
]

EQ_TOL = 1e-12

_FIELDS = ("n", "s", "p", "r", "q", "alpha", "beta", "gamma",
           "theta", "mu", "delta", "epsilon", "sigma")


class MissingFieldsError(ValueError):
    """A validator was handed a ParamSet without its required fields."""

    def __init__(self, missing, context=""):
        self.missing = list(missing)
        self.context = context
        super().__init__(f"{context or 'validator'}: missing fields {self.missing}")


class DegenerateDerivationError(ValueError):
    """A derived exponent is undetermined (0/0) or out of range."""


class ValidationError(Exception):
    """A validator gate failed; carries the full report."""

    def __init__(self, report: "ValidationReport", context: str = ""):
        self.report = report
        self.context = context
        names = ", ".join(c.name for c in report.checks if not c.passed)
        deets = "; ".join(c.detail for c in report.checks if not c.passed and c.detail)
        msg = f"parameter conditions violated: {names}"
        if deets:
            msg += f" ({deets})"
        if context:
            msg = f"{context}: {msg}"
        super().__init__(msg)


@dataclass(frozen=True)
class ParamSet:
    """The exponent tuple; any field may be absent (None)."""

    n: int | None = None
    s: float | None = None
    p: float | None = None
    r: float | None = None
    q: float | None = None
    alpha: float | None = None
    beta: float | None = None
    gamma: float | None = None
    theta: float | None = None
    mu: float | None = None
    delta: float | None = None
    epsilon: float | None = None
    sigma: float | None = None

    def to_dict(self) -> dict:
        out = {}
        for name in _FIELDS:
            v = getattr(self, name)
            if v is not None:
                out[name] = v
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ParamSet":
        kw = {}
        for key, v in d.items():
            if key not in _FIELDS:
                raise ValueError(f"unknown parameter {key!r}")
            if v is None:
                continue
            if key == "n":
                n = float(v)
                if n != int(n):
                    raise ValueError(f"dimension n must be an integer, got {v!r}")
                kw[key] = int(n)
            else:
                kw[key] = float(v)
        return cls(**kw)

    def replace(self, **kw) -> "ParamSet":
        return dataclasses.replace(self, **kw)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    boundary: bool = False
    detail: str = ""

    def __str__(self):
        tag = "pass" if self.passed else "FAIL"
        if self.boundary:
            tag += " (boundary)"
        return f"[{tag}] {self.name}" + (f": {self.detail}" if self.detail else "")


@dataclass(frozen=True)
class ValidationReport:
    name: str
    checks: tuple[Check, ...]
    extra: dict = dataclasses.field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def raise_if_failed(self, context: str = ""):
        if not self.ok:
            raise ValidationError(self, context or self.name)
        return self

    def __str__(self):
        lines = [f"{self.name}: {'PASS' if self.ok else 'FAIL'}"]
        lines += [f"  {c}" for c in self.checks]
        for k, v in self.extra.items():
            lines.append(f"  {k} = {v}")
        return "\n".join(lines)


def _require(ps: ParamSet, names, context):
    missing = [x for x in names if getattr(ps, x) is None]
    if missing:
        raise MissingFieldsError(missing, context)


def _near(x, y, scale=1.0):
    return abs(x - y) <= EQ_TOL * max(1.0, abs(scale))


def _lt(name, x, y, detail=""):
    """Strict x < y, boundary-tagged at equality within 1e-12."""
    return Check(name, x < y, _near(x, y, max(abs(x), abs(y))), detail)


def _le(name, x, y, detail=""):
    return Check(name, x <= y, _near(x, y, max(abs(x), abs(y))), detail)


def _eq(name, lhs, rhs, detail=""):
    return Check(name, abs(lhs - rhs) <= EQ_TOL, False,
                 detail or f"|lhs-rhs| = {abs(lhs - rhs):.3e}")


def _dual(n, p):
    """n/p' = n (1 - 1/p); the p = 1 case gives 0."""
    return n * (1.0 - 1.0 / p)


def _band(name, lo, x, hi, strict_lo=True, strict_hi=True, detail=""):
    ok_lo = lo < x if strict_lo else lo <= x
    ok_hi = x < hi if strict_hi else x <= hi
    boundary = _near(x, lo, max(abs(x), abs(lo))) or _near(x, hi, max(abs(x), abs(hi)))
    return Check(name, ok_lo and ok_hi, boundary, detail)


def validate_stein_weiss(ps: ParamSet) -> ValidationReport:
    """Hypotheses of the weighted potential inequality (L^p_alpha -> L^r_gamma)."""
    _require(ps, ("n", "s", "p", "r", "alpha", "gamma"), "validate_stein_weiss")
    n, s, p, r, a, g = ps.n, ps.s, ps.p, ps.r, ps.alpha, ps.gamma
    checks = (
        _band("0 < s < n", 0.0, s, n),
        Check("1 < p <= r < inf", p > 1 and p <= r and np.isfinite(r),
              _near(p, 1.0) or _near(p, r, max(p, r)),
              f"p={p}, r={r}"),
        _lt("alpha < n/p'", a, _dual(n, p), f"alpha={a}, n/p'={_dual(n, p)}"),
        _lt("gamma > -n/r", -n / r, g, f"gamma={g}, -n/r={-n / r}"),
        _le("alpha >= gamma", g, a, f"alpha={a}, gamma={g}"),
        _eq("1/r = 1/p + (alpha-gamma-s)/n",
            1.0 / r, 1.0 / p + (a - g - s) / n),
    )
    return ValidationReport("stein_weiss", checks)


def validate_improved(ps: ParamSet) -> ValidationReport:
    """Hypotheses of the Besov-improved potential inequality."""
    _require(ps, ("n", "s", "p", "r", "alpha", "gamma", "theta", "mu"),
             "validate_improved")
    n, s, p, r = ps.n, ps.s, ps.p, ps.r
    a, g, th, mu = ps.alpha, ps.gamma, ps.theta, ps.mu
    frac = mu / (mu + s) if mu + s > 0 else np.inf
    lower = max(p / r, frac)
    checks = (
        _le("n >= 2", 2, n, f"n={n}"),
        _band("0 < s < n", 0.0, s, n),
        Check("1 < p <= r", p > 1 and p <= r,
              _near(p, 1.0) or _near(p, r, max(p, r)), f"p={p}, r={r}"),
        _lt("alpha < n/p'", a, _dual(n, p)),
        _lt("-gamma < n/r", -g, n / r, f"gamma={g}"),
        _le("alpha - gamma/theta >= 0", 0.0, a - g / th if th != 0 else -np.inf,
            f"alpha - gamma/theta = {a - g / th if th != 0 else float('nan')}"),
        _lt("mu > 0", 0.0, mu, f"mu={mu}"),
        _band("max(p/r, mu/(mu+s)) <= theta <= 1", lower, th, 1.0,
              strict_lo=False, strict_hi=False,
              detail=f"lower={lower}, theta={th}"),
        _eq("gamma + n/r = theta*(alpha + n/p - s) + (1-theta)*mu",
            g + n / r, th * (a + n / p - s) + (1.0 - th) * mu),
    )
    return ValidationReport("improved", checks)


def validate_ckn(ps: ParamSet) -> ValidationReport:
    """Condition check for the first-order interpolation inequality
    || |x|^gamma u ||_r <= C || |x|^alpha grad u ||_p^theta || |x|^beta u ||_q^(1-theta).
    """
    _require(ps, ("n", "p", "q", "r", "alpha", "beta", "gamma", "theta"),
             "validate_ckn")
    n, p, q, r = ps.n, ps.p, ps.q, ps.r
    a, b, g, th = ps.alpha, ps.beta, ps.gamma, ps.theta
    if ps.sigma is not None:
        sigma = ps.sigma
        sigma_detail = f"sigma={sigma} (given)"
    elif th > 0:
        sigma = (g - (1.0 - th) * b) / th
        sigma_detail = f"sigma={sigma} (derived)"
    else:
        sigma = None
        sigma_detail = "sigma unconstrained at theta=0"

    if sigma is None:
        rel = _eq("gamma = theta*sigma + (1-theta)*beta", g, b, sigma_detail)
    else:
        rel = _eq("gamma = theta*sigma + (1-theta)*beta",
                  g, th * sigma + (1.0 - th) * b, sigma_detail)

    lhs_crit = 1.0 / p + (a - 1.0) / n
    rhs_crit = 1.0 / r + g / n
    critical = abs(lhs_crit - rhs_crit) <= EQ_TOL
    if th > 0 and sigma is not None:
        cond_lo = _le("alpha - sigma >= 0 (theta > 0)", 0.0, a - sigma,
                      f"alpha-sigma={a - sigma}")
        if critical:
            cond_hi = _le("alpha - sigma <= 1 (critical case)", a - sigma, 1.0,
                          f"alpha-sigma={a - sigma}")
        else:
            cond_hi = Check("alpha - sigma <= 1 (critical case)", True,
                            detail="not in the critical case")
    else:
        cond_lo = Check("alpha - sigma >= 0 (theta > 0)", True,
                        detail="vacuous at theta=0")
        cond_hi = Check("alpha - sigma <= 1 (critical case)", True,
                        detail="vacuous at theta=0")

    checks = (
        _le("p >= 1", 1.0, p, f"p={p}"),
        _le("q >= 1", 1.0, q, f"q={q}"),
        _lt("r > 0", 0.0, r, f"r={r}"),
        _band("0 <= theta <= 1", 0.0, th, 1.0, strict_lo=False, strict_hi=False),
        _lt("1/p + alpha/n > 0", 0.0, 1.0 / p + a / n),
        _lt("1/q + beta/n > 0", 0.0, 1.0 / q + b / n),
        _lt("1/r + gamma/n > 0", 0.0, 1.0 / r + g / n),
        rel,
        _eq("1/r + gamma/n = theta*(1/p + (alpha-1)/n) + (1-theta)*(1/q + beta/n)",
            rhs_crit, th * lhs_crit + (1.0 - th) * (1.0 / q + b / n)),
        cond_lo,
        cond_hi,
    )
    extra = {} if sigma is None else {"sigma": sigma}
    return ValidationReport("ckn", checks, extra)


def validate_ckn_improved(ps: ParamSet) -> ValidationReport:
    """Hypotheses of the Besov-improved gradient (s = 1) inequality."""
    _require(ps, ("n", "p", "r", "alpha", "gamma", "theta", "mu"),
             "validate_ckn_improved")
    n, p, r = ps.n, ps.p, ps.r
    a, g, th, mu = ps.alpha, ps.gamma, ps.theta, ps.mu
    frac = mu / (mu + 1.0) if mu + 1.0 > 0 else np.inf
    lower = max(p / r, frac)
    checks = [
        _lt("n > 1", 1, n, f"n={n}"),
        Check("1 < p <= r", p > 1 and p <= r,
              _near(p, 1.0) or _near(p, r, max(p, r)), f"p={p}, r={r}"),
        _lt("alpha < n/p'", a, _dual(n, p)),
        _band("-n/r < gamma < n/r'", -n / r, g, _dual(n, r), detail=f"gamma={g}"),
        _le("alpha - gamma/theta >= 0", 0.0, a - g / th if th != 0 else -np.inf),
        _lt("mu > 0", 0.0, mu, f"mu={mu}"),
        _band("max(p/r, mu/(mu+1)) <= theta <= 1", lower, th, 1.0,
              strict_lo=False, strict_hi=False,
              detail=f"lower={lower}, theta={th}"),
        _eq("gamma + n/r = theta*(alpha + n/p - 1) + (1-theta)*mu",
            g + n / r, th * (a + n / p - 1.0) + (1.0 - th) * mu),
    ]
    if ps.s is not None:
        checks.insert(0, _eq("s = 1 (gradient form)", ps.s, 1.0, f"s={ps.s}"))
    return ValidationReport("ckn_improved", tuple(checks))


def validate_compact_embedding(ps: ParamSet) -> ValidationReport:
    """Subcriticality conditions for the locally compact weighted embedding."""
    _require(ps, ("n", "s", "p", "q", "alpha", "beta"), "validate_compact_embedding")
    n, s, p, q, a, b = ps.n, ps.s, ps.p, ps.q, ps.alpha, ps.beta
    mid = n / p - n / q + a - b
    checks = (
        Check("1 < p <= q < inf", p > 1 and p <= q and np.isfinite(q),
              _near(p, 1.0) or _near(p, q, max(p, q)),
              "p <= q required" if q < p else f"p={p}, q={q}"),
        _lt("beta > -n/q", -n / q, b, f"beta={b}, -n/q={-n / q}"),
        _lt("alpha < n/p'", a, _dual(n, p)),
        _le("alpha >= beta", b, a),
        _lt("alpha + n/p > s", s, a + n / p, f"alpha+n/p={a + n / p}, s={s}"),
        _lt("s > n/p - n/q + alpha - beta", mid, s, f"mid={mid}, s={s}"),
        _lt("n/p - n/q + alpha - beta > 0", 0.0, mid, f"mid={mid}"),
    )
    return ValidationReport("compact_embedding", checks,
                            {"delta": s - mid})


def validate_maximizer(ps: ParamSet) -> ValidationReport:
    """Hypotheses under which a maximizer of the p=2 quotient exists."""
    _require(ps, ("n", "s", "r", "alpha", "gamma"), "validate_maximizer")
    n, s, r, a, g = ps.n, ps.s, ps.r, ps.alpha, ps.gamma
    checks = [
        _le("n >= 2", 2, n, f"n={n}"),
        _band("0 < s < n/2", 0.0, s, n / 2.0),
        _band("2 < r < inf", 2.0, r, np.inf, detail=f"r={r}"),
        _band("0 < alpha < n/2", 0.0, a, n / 2.0, detail=f"alpha={a}"),
        _band("-n/r < gamma < alpha", -n / r, g, a, detail=f"gamma={g}"),
        _eq("1/r - 1/2 = (alpha-gamma-s)/n", 1.0 / r - 0.5, (a - g - s) / n),
    ]
    if ps.p is not None:
        checks.insert(0, _eq("p = 2", ps.p, 2.0, f"p={ps.p}"))
    return ValidationReport("maximizer", tuple(checks))


def derive(ps: ParamSet, field: str) -> ParamSet:
    """Fill one exponent from its defining identity; returns a new ParamSet.

    Supported fields: r (potential scaling), mu (embedding balance), delta
    (truncation rate), epsilon (second-case gap 2e = mu/theta - mu), theta
    (interpolation balance), sigma (weight interpolation).
    """
    if field == "r":
        _require(ps, ("n", "s", "p", "alpha", "gamma"), "derive(r)")
        inv = 1.0 / ps.p + (ps.alpha - ps.gamma - ps.s) / ps.n
        if inv <= EQ_TOL:
            raise DegenerateDerivationError(f"1/r = {inv} is not positive")
        return ps.replace(r=1.0 / inv)
    if field == "mu":
        _require(ps, ("n", "s", "p", "alpha"), "derive(mu)")
        return ps.replace(mu=ps.n / ps.p + ps.alpha - ps.s)
    if field == "delta":
        _require(ps, ("n", "s", "p", "q", "alpha", "beta"), "derive(delta)")
        return ps.replace(
            delta=ps.s - (ps.n / ps.p - ps.n / ps.q + ps.alpha - ps.beta))
    if field == "epsilon":
        _require(ps, ("mu", "theta"), "derive(epsilon)")
        if ps.theta == 0:
            raise DegenerateDerivationError("epsilon undefined at theta = 0")
        return ps.replace(epsilon=0.5 * (ps.mu / ps.theta - ps.mu))
    if field == "theta":
        _require(ps, ("n", "s", "p", "r", "alpha", "gamma", "mu"), "derive(theta)")
        num = ps.gamma + ps.n / ps.r - ps.mu
        den = ps.alpha + ps.n / ps.p - ps.s - ps.mu
        if abs(den) <= EQ_TOL:
            if abs(num) <= EQ_TOL:
                raise DegenerateDerivationError(
                    "0/0: the balance holds for every theta")
            raise DegenerateDerivationError(
                f"no theta satisfies the balance (num={num}, den=0)")
        return ps.replace(theta=num / den)
    if field == "sigma":
        _require(ps, ("beta", "gamma", "theta"), "derive(sigma)")
        if ps.theta == 0:
            raise DegenerateDerivationError("sigma undetermined at theta = 0")
        return ps.replace(sigma=(ps.gamma - (1.0 - ps.theta) * ps.beta) / ps.theta)
    raise ValueError(f"cannot derive field {field!r}")
