"""Convex rate functions for normalized radius laws.

A rate function ``I`` is a closed proper convex function on ``[0, inf)``
with a unique zero ``rstar``; it governs the ``exp(-n * I(R))`` decay of
the probability that the normalized radius in dimension ``n`` is near
``R``.  Rate functions are built from one of four radius-law
descriptions: a deterministic radius, a Gaussian grain (normalized
radius distributed like the norm of an n-vector of centered Gaussians
divided by sqrt(n)), a scaled log moment generating function, or a
tabulated convex set of knots.

All values are extended reals; ``math.inf`` is the only infinity
encoding used (no sentinel magic numbers).
"""
from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import ValidationError

INF = math.inf

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_INVPHI2 = (3.0 - math.sqrt(5.0)) / 2.0


def golden_section_max(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    xtol: float = 1e-12,
    max_iter: int = 400,
) -> tuple[float, float]:
    """Maximize a quasiconcave scalar function on [lo, hi].

    Returns (argmax, max).  Tolerates -inf values outside the effective
    domain; the bracket shrinks away from them.
    """
    a, b = lo, hi
    h = b - a
    c = a + _INVPHI2 * h
    d = a + _INVPHI * h
    fc, fd = f(c), f(d)
    it = 0
    while h > xtol and it < max_iter:
        if fc >= fd:
            b, d, fd = d, c, fc
            h = b - a
            c = a + _INVPHI2 * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + _INVPHI * h
            fd = f(d)
        it += 1
    if fc >= fd:
        return c, fc
    return d, fd


def golden_section_min(f, lo, hi, xtol=1e-12, max_iter=400):
    x, v = golden_section_max(lambda t: -f(t), lo, hi, xtol=xtol, max_iter=max_iter)
    return x, -v


# ---------------------------------------------------------------------------
# Radius-law specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Deterministic:
    """All normalized radii equal ``rstar`` in every dimension."""

    rstar: float


@dataclass(frozen=True)
class GaussianGrain:
    """Normalized radius = norm of n iid N(0, sigma^2) coordinates / sqrt(n)."""

    sigma: float


@dataclass(frozen=True)
class FromLogMgf:
    """Radius law given through its scaled log-MGF ``theta -> Lambda(theta)``.

    ``log_mgf`` must be convex, vanish at 0, and be finite on a right
    neighborhood of 0 (return ``math.inf`` outside its finiteness domain).
    """

    log_mgf: Callable[[float], float]


@dataclass(frozen=True)
class TabulatedConvex:
    """Rate function given by ordered knots (R, I(R)), convex with min 0."""

    knots: tuple[tuple[float, float], ...]


RadiusLawSpec = Union[Deterministic, GaussianGrain, FromLogMgf, TabulatedConvex]


@dataclass(frozen=True)
class MomentConditionReport:
    gamma: float
    satisfied: bool
    evidence: str


def validate_law(spec: RadiusLawSpec) -> None:
    """Raise ValidationError unless the radius-law spec invariants hold."""
    if isinstance(spec, Deterministic):
        if not (math.isfinite(spec.rstar) and spec.rstar > 0):
            raise ValidationError(f"deterministic radius must be positive, got {spec.rstar}")
    elif isinstance(spec, GaussianGrain):
        if not (math.isfinite(spec.sigma) and spec.sigma > 0):
            raise ValidationError(f"sigma must be positive, got {spec.sigma}")
    elif isinstance(spec, FromLogMgf):
        lam = spec.log_mgf
        if abs(lam(0.0)) > 1e-12:
            raise ValidationError(f"log-MGF must vanish at 0, got {lam(0.0)!r}")
        if not math.isfinite(lam(1e-6)):
            raise ValidationError("log-MGF is not finite on a right neighborhood of 0")
        _check_log_mgf_convexity(lam)
    elif isinstance(spec, TabulatedConvex):
        _validate_knots(spec.knots)
    else:
        raise ValidationError(f"unknown radius-law spec: {spec!r}")


def _check_log_mgf_convexity(lam, points: int = 33) -> None:
    # midpoint convexity on a sampled grid of the finite region near 0
    hi = 1.0
    while not math.isfinite(lam(hi)) and hi > 1e-6:
        hi /= 2.0
    thetas = np.linspace(-hi, hi, points)
    vals = [lam(float(t)) for t in thetas]
    for i in range(1, points - 1):
        a, m, b = vals[i - 1], vals[i], vals[i + 1]
        if math.isfinite(a) and math.isfinite(b):
            if m > 0.5 * (a + b) + 1e-9 * max(1.0, abs(a), abs(b)):
                raise ValidationError(
                    f"log-MGF fails midpoint convexity at theta={thetas[i]:.6g}"
                )


def _validate_knots(knots: Sequence[tuple[float, float]]) -> None:
    if len(knots) < 2:
        raise ValidationError("tabulated rate function needs at least two knots")
    rs = [float(r) for r, _ in knots]
    vals = [float(v) for _, v in knots]
    for r, v in zip(rs, vals):
        if not (math.isfinite(r) and r >= 0 and math.isfinite(v)):
            raise ValidationError(f"bad knot ({r}, {v})")
    for a, b in zip(rs, rs[1:]):
        if b <= a:
            raise ValidationError("knot radii must be strictly increasing")
    vmin = min(vals)
    if abs(vmin) > 1e-12:
        raise ValidationError(f"tabulated minimum must be 0, got {vmin}")
    if vals.count(vmin) != 1:
        raise ValidationError("tabulated minimum value must be attained at a unique knot")
    slopes = [(v1 - v0) / (r1 - r0) for (r0, v0), (r1, v1) in zip(knots, knots[1:])]
    for i in range(len(slopes) - 1):
        if slopes[i] > slopes[i + 1] + 1e-12:
            raise ValidationError(
                "non-convex table: violating triple "
                f"({rs[i]}, {vals[i]}), ({rs[i + 1]}, {vals[i + 1]}), "
                f"({rs[i + 2]}, {vals[i + 2]})"
            )


# ---------------------------------------------------------------------------
# RateFunction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateFunction:
    """Closed proper convex rate function with one-sided derivatives.

    ``domain_lo``/``domain_hi`` bound the effective domain; ``I`` is +inf
    outside.  ``lo_open`` marks a left endpoint where ``I`` diverges (the
    Gaussian case at 0).  One-sided derivative conventions outside the
    domain: -inf to the left, +inf to the right; at a finite right
    endpoint the right derivative is +inf, and symmetrically at the left.
    """

    rstar: float
    domain_lo: float
    domain_hi: float
    _value: Callable[[float], float]
    _dminus: Callable[[float], float]
    _dplus: Callable[[float], float]
    lo_open: bool = False

    def value(self, r: float) -> float:
        if r < self.domain_lo or r > self.domain_hi:
            return INF
        if self.lo_open and r <= self.domain_lo:
            return INF
        return self._value(r)

    def value_array(self, rs: np.ndarray) -> np.ndarray:
        """Vectorized ``value`` with the same domain conventions."""
        rs = np.asarray(rs, dtype=float)
        inside = (rs >= self.domain_lo) & (rs <= self.domain_hi)
        if self.lo_open:
            inside &= rs > self.domain_lo
        out = np.full(rs.shape, INF)
        if inside.any():
            try:
                vals = np.asarray(self._value(rs[inside]), dtype=float)
                if vals.shape != rs[inside].shape:
                    raise TypeError
            except (TypeError, ValueError):
                vals = np.array([self._value(float(r)) for r in rs[inside]])
            out[inside] = vals
        return out

    def dminus(self, r: float) -> float:
        if r < self.domain_lo:
            return -INF
        if r > self.domain_hi:
            return INF
        if r == self.domain_lo:
            return -INF
        return self._dminus(r)

    def dplus(self, r: float) -> float:
        if r < self.domain_lo:
            return -INF
        if r > self.domain_hi:
            return INF
        if r == self.domain_hi:
            return INF
        if self.lo_open and r == self.domain_lo:
            return -INF
        return self._dplus(r)

    def subdifferential(self, r: float) -> tuple[float, float]:
        """One-sided derivative interval [I'_-(r), I'_+(r)] at r > 0."""
        if not r > 0:
            raise ValidationError(f"subdifferential requires R > 0, got {r}")
        return self.dminus(r), self.dplus(r)


def subdifferential(rate: RateFunction, r: float) -> tuple[float, float]:
    return rate.subdifferential(r)


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def gaussian_rate_value(sigma: float, r):
    """Closed-form Gaussian-grain rate: r^2/(2 sigma^2) - 1/2 - log(r/sigma)."""
    rr = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(
            rr > 0,
            rr * rr / (2.0 * sigma * sigma) - 0.5 - np.log(np.where(rr > 0, rr, 1.0) / sigma),
            INF,
        )
    if np.ndim(r) == 0:
        return float(out)
    return out


def build_rate(spec: RadiusLawSpec) -> RateFunction:
    """Construct the rate function determined by a radius-law spec."""
    validate_law(spec)
    if isinstance(spec, Deterministic):
        r0 = spec.rstar
        return RateFunction(
            rstar=r0,
            domain_lo=r0,
            domain_hi=r0,
            _value=lambda r: 0.0,
            _dminus=lambda r: -INF,
            _dplus=lambda r: INF,
        )
    if isinstance(spec, GaussianGrain):
        s = spec.sigma

        def deriv(r):
            return r / (s * s) - 1.0 / r

        return RateFunction(
            rstar=s,
            domain_lo=0.0,
            domain_hi=INF,
            _value=lambda r: gaussian_rate_value(s, r),
            _dminus=deriv,
            _dplus=deriv,
            lo_open=True,
        )
    if isinstance(spec, TabulatedConvex):
        return _build_tabulated(spec.knots)
    return _build_from_log_mgf(spec.log_mgf)


def _build_tabulated(knots: Sequence[tuple[float, float]]) -> RateFunction:
    rs = [float(r) for r, _ in knots]
    vals = [float(v) for _, v in knots]
    slopes = [(v1 - v0) / (r1 - r0) for r0, v0, r1, v1 in zip(rs, vals, rs[1:], vals[1:])]
    rstar = rs[vals.index(min(vals))]

    def value(r: float) -> float:
        j = bisect.bisect_right(rs, r) - 1
        if j == len(rs) - 1:
            return vals[-1]
        t = (r - rs[j]) / (rs[j + 1] - rs[j])
        return vals[j] + t * (vals[j + 1] - vals[j])

    def dminus(r: float) -> float:
        j = bisect.bisect_left(rs, r)
        if j < len(rs) and rs[j] == r:
            return slopes[j - 1] if j > 0 else -INF
        return slopes[j - 1]

    def dplus(r: float) -> float:
        j = bisect.bisect_right(rs, r) - 1
        if j == len(rs) - 1:
            return INF
        return slopes[j]

    return RateFunction(
        rstar=rstar,
        domain_lo=rs[0],
        domain_hi=rs[-1],
        _value=value,
        _dminus=dminus,
        _dplus=dplus,
    )


def _build_from_log_mgf(lam: Callable[[float], float]) -> RateFunction:
    rstar = _log_mgf_derivative_at_zero(lam)

    def value(r: float) -> float:
        v, _ = legendre_transform_with_argmax(lam, r)
        return v

    def deriv(r: float) -> float:
        # I'(r) equals the Legendre maximizer theta*(r)
        _, theta = legendre_transform_with_argmax(lam, r)
        return theta

    return RateFunction(
        rstar=rstar,
        domain_lo=0.0,
        domain_hi=INF,
        _value=value,
        _dminus=deriv,
        _dplus=deriv,
        lo_open=True,
    )


def _log_mgf_derivative_at_zero(lam) -> float:
    # rstar = Lambda'(0); Richardson-extrapolated difference quotient
    h = 1e-3
    if math.isfinite(lam(-h)):
        d1 = (lam(h) - lam(-h)) / (2.0 * h)
        d2 = (lam(h / 2.0) - lam(-h / 2.0)) / h
        return (4.0 * d2 - d1) / 3.0
    h = 1e-5
    d1 = lam(h) / h
    d2 = lam(h / 2.0) / (h / 2.0)
    return 2.0 * d2 - d1


# ---------------------------------------------------------------------------
# Legendre transform
# ---------------------------------------------------------------------------

_THETA_CAP = 1e18


def legendre_transform_with_argmax(
    lam: Callable[[float], float], r: float, theta_tol: float = 1e-12
) -> tuple[float, float]:
    """sup over theta of (theta*r - Lambda(theta)) and its maximizer.

    Returns (inf, nan) when the objective keeps increasing past the
    bracket cap, i.e. the supremum is +inf.
    """

    def f(theta: float) -> float:
        v = lam(theta)
        return theta * r - v if math.isfinite(v) else -INF

    # expand right from [0, 1] by doubling while the edge value still rises
    hi = 1.0
    while math.isfinite(f(hi)) and f(2.0 * hi) > f(hi):
        hi *= 2.0
        if hi > _THETA_CAP:
            return INF, math.nan
    hi *= 2.0
    lo = -1.0
    while math.isfinite(f(lo)) and f(2.0 * lo) > f(lo):
        lo *= 2.0
        if lo < -_THETA_CAP:
            return INF, math.nan
    lo *= 2.0

    xtol = theta_tol * max(1.0, abs(lo), abs(hi))
    theta, val = golden_section_max(f, lo, hi, xtol=xtol)
    # f(0) = 0, so the supremum is never negative
    if val < 0.0:
        return 0.0, 0.0
    return val, theta


def legendre_transform(lam: Callable[[float], float], r: float) -> float:
    """Numerical convex conjugate of ``lam`` evaluated at ``r > 0``."""
    if not r > 0:
        raise ValidationError(f"legendre_transform requires R > 0, got {r}")
    v, _ = legendre_transform_with_argmax(lam, r)
    return v


def gaussian_log_mgf(sigma: float, theta: float) -> float:
    """Scaled log-MGF of the Gaussian-grain normalized radius.

    Closed form: with u = (theta*sigma + sqrt(theta^2 sigma^2 + 4)) / 2,
    Lambda(theta) = (theta*sigma/2) * u + log(u).  Finite for all theta
    and zero at theta = 0.
    """
    ts = theta * sigma
    u = 0.5 * (ts + math.hypot(ts, 2.0))
    return 0.5 * ts * u + math.log(u)


# ---------------------------------------------------------------------------
# Moment condition
# ---------------------------------------------------------------------------


def check_moment_condition(spec: RadiusLawSpec, gamma: float = 2.0) -> MomentConditionReport:
    """Check the gamma-th scaled moment growth condition for gamma > 1."""
    validate_law(spec)
    if gamma <= 1.0:
        raise ValidationError(f"gamma must exceed 1, got {gamma}")
    if isinstance(spec, Deterministic):
        return MomentConditionReport(
            gamma=gamma,
            satisfied=True,
            evidence=f"bounded radii: scaled moment equals rstar^gamma = {spec.rstar ** gamma:.6g}",
        )
    if isinstance(spec, GaussianGrain):
        return MomentConditionReport(
            gamma=gamma,
            satisfied=True,
            evidence="log-MGF finite on all of R, so every scaled moment is finite",
        )
    if isinstance(spec, TabulatedConvex):
        hi = spec.knots[-1][0]
        return MomentConditionReport(
            gamma=gamma,
            satisfied=True,
            evidence=f"bounded support [{spec.knots[0][0]:.6g}, {hi:.6g}]",
        )
    # FromLogMgf: the scaled moment exponent is sup_R (gamma log R - I(R))
    rate = build_rate(spec)
    sup = -INF
    for r in np.geomspace(max(rate.rstar, 1e-3) * 1e-2, max(rate.rstar, 1.0) * 1e4, 200):
        v = rate.value(float(r))
        if math.isfinite(v):
            sup = max(sup, gamma * math.log(r) - v)
    ok = math.isfinite(sup)
    return MomentConditionReport(
        gamma=gamma,
        satisfied=ok,
        evidence=(
            f"sampled sup of (gamma log R - I(R)) = {sup:.6g}"
            if ok
            else "sampled growth check diverged"
        ),
    )


# ---------------------------------------------------------------------------
# External interfaces
# ---------------------------------------------------------------------------


def radius_law_from_dict(doc: dict) -> RadiusLawSpec:
    """Parse a radius-law spec from a JSON-compatible mapping."""
    if not isinstance(doc, dict) or "variant" not in doc:
        raise ValidationError(f"radius law must be a mapping with a 'variant' key: {doc!r}")
    variant = doc["variant"]
    try:
        if variant == "deterministic":
            spec: RadiusLawSpec = Deterministic(rstar=float(doc["rstar"]))
        elif variant == "gaussian":
            spec = GaussianGrain(sigma=float(doc["sigma"]))
        elif variant == "tabulated":
            spec = TabulatedConvex(knots=tuple((float(r), float(v)) for r, v in doc["knots"]))
        else:
            raise ValidationError(f"unknown radius-law variant {variant!r}")
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed radius law {doc!r}: {exc}") from exc
    validate_law(spec)
    return spec


def tabulated_from_csv(path: str) -> TabulatedConvex:
    """Load a tabulated rate function from a two-column CSV of (R, I)."""
    knots: list[tuple[float, float]] = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                knots.append((float(row[0]), float(row[1])))
            except (IndexError, ValueError) as exc:
                raise ValidationError(f"bad CSV row {row!r}: {exc}") from exc
    spec = TabulatedConvex(knots=tuple(knots))
    validate_law(spec)
    return spec
