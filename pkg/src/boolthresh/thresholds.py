"""Variational thresholds of the high-dimensional Boolean model family.

Three critical values of the asymptotic normalized log-intensity are
computed from the radius rate function ``I``:

* volume-fraction threshold: ``-log(2 pi e)/2 + inf_{R >= R*} (I(R) - log R)``
* degree threshold:          ``-log(2 pi e)/2 + inf_{R >= R*} (2 I(R) - log 2R)``
* percolation threshold:     ``-log(2 pi e)/2 + inf_{R >= R*} (I(R) - log(R + R*))``

Each infimum is attained at the unique radius whose subdifferential
contains the derivative of the concave log term, which is what the
solver exploits.  Every threshold is cross-checked against a direct
scalar minimization of its objective, and every report asserts the
threshold and radius orderings.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConsistencyError, ValidationError
from .rate import (
    Deterministic,
    RadiusLawSpec,
    RateFunction,
    build_rate,
    golden_section_min,
)

INF = math.inf

#: -(1/2) log(2 pi e), the dimension-normalized unit-ball volume constant.
MINUS_HALF_LOG_2PIE = -0.5 * math.log(2.0 * math.pi * math.e)

_CERT_TOL = 1e-8
_GRID_POINTS = 10_000
_GRID_TRIPWIRE = 1e-6


class Target(enum.Enum):
    VOLUME_FRACTION = "volume_fraction"
    DEGREE = "degree"
    PERCOLATION = "percolation"


@dataclass(frozen=True)
class OptimalityCertificate:
    """Witness that g(radius) lies in the subdifferential of I at radius."""

    target: Target
    radius: float
    g_value: float
    subgrad_lo: float
    subgrad_hi: float

    def holds(self, tol: float = _CERT_TOL) -> bool:
        slack = tol * max(1.0, abs(self.g_value))
        return self.subgrad_lo - slack <= self.g_value <= self.subgrad_hi + slack


@dataclass(frozen=True)
class ThresholdReport:
    rho: float
    tau_d: float
    tau_p: float
    tau_v: float
    r_d: float
    r_p: float
    r_v: float
    rstar: float
    regime: str
    certificates: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        doc = {
            "rho": self.rho,
            "tau_d": self.tau_d,
            "tau_p": self.tau_p,
            "tau_v": self.tau_v,
            "r_d": self.r_d,
            "r_p": self.r_p,
            "r_v": self.r_v,
            "rstar": self.rstar,
            "regime": self.regime,
        }
        for name, cert in self.certificates.items():
            doc[f"cert_{name}_g"] = cert.g_value
            doc[f"cert_{name}_subgrad_lo"] = cert.subgrad_lo
            doc[f"cert_{name}_subgrad_hi"] = cert.subgrad_hi
        return doc


def _g_function(target: Target, rstar: float) -> Callable[[float], float]:
    if target is Target.VOLUME_FRACTION:
        return lambda r: 1.0 / r
    if target is Target.DEGREE:
        return lambda r: 1.0 / (2.0 * r)
    return lambda r: 1.0 / (r + rstar)


def solve_optimal_radius(
    rate: RateFunction, target: Target
) -> tuple[float, OptimalityCertificate]:
    """Unique R >= R* whose subdifferential contains the target's g(R).

    Monotone bisection on the sign of I'_+(R) - g(R): the left derivative
    chain is nondecreasing while g is strictly decreasing, so there is a
    single sign change.  If dominance is never reached inside the domain,
    the domain's right endpoint is returned with a boundary certificate.
    """
    rstar = rate.rstar
    g = _g_function(target, rstar)

    if rate.dplus(rstar) >= g(rstar):
        radius, lo_probe = rstar, rstar
    else:
        lo = rstar
        hi = rstar + max(rstar, 1.0)
        if hi > rate.domain_hi:
            hi = rate.domain_hi
        while rate.dplus(hi) < g(hi):
            lo = hi
            hi = rstar + 2.0 * (hi - rstar)
            if hi >= rate.domain_hi:
                hi = rate.domain_hi
                break
            if hi - rstar > 1e15:
                raise ConsistencyError(
                    f"bracket expansion failed for {target}: derivative never dominates g"
                )
        for _ in range(200):
            if hi - lo <= 1e-12 * max(1.0, abs(hi)):
                break
            mid = 0.5 * (lo + hi)
            if rate.dplus(mid) >= g(mid):
                hi = mid
            else:
                lo = mid
        radius, lo_probe = hi, lo

    gv = g(radius)
    sub_lo = rate.dminus(radius)
    sub_hi = rate.dplus(radius)
    if lo_probe < radius:
        # the bracket endpoints straddle a possible kink; report the
        # subdifferential limits across the final bracket
        sub_lo = min(sub_lo, rate.dplus(lo_probe))
    cert = OptimalityCertificate(
        target=target, radius=radius, g_value=gv, subgrad_lo=sub_lo, subgrad_hi=sub_hi
    )
    if not cert.holds():
        raise ConsistencyError(
            f"optimality certificate violated for {target}: "
            f"g={gv!r} not in [{sub_lo!r}, {sub_hi!r}] at R={radius!r}"
        )
    return radius, cert


# ---------------------------------------------------------------------------
# Direct minimization cross-check
# ---------------------------------------------------------------------------


def _direct_infimum(
    f: Callable[[float], float], lo: float, hi: float, grid_points: int = _GRID_POINTS
) -> tuple[float, float]:
    """(refined infimum, raw grid minimum) of a convex objective on [lo, hi]."""
    if hi <= lo:
        v = f(lo)
        return v, v
    if math.isinf(hi):
        hi = lo + max(1.0, lo)
        while f(2.0 * hi) < f(hi):
            hi *= 2.0
            if hi > 1e15:
                raise ConsistencyError("direct minimization bracket expansion failed")
        hi *= 2.0
    xs = np.geomspace(max(lo, 1e-300), hi, grid_points)
    xs[0], xs[-1] = lo, hi
    try:
        vals = np.asarray(f(xs), dtype=float)
        if vals.shape != xs.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.array([f(float(x)) for x in xs])
    i = int(np.nanargmin(vals))
    grid_min = float(vals[i])
    a = float(xs[max(i - 1, 0)])
    b = float(xs[min(i + 1, len(xs) - 1)])
    _, refined = golden_section_min(f, a, b, xtol=1e-12 * max(1.0, b))
    return min(refined, grid_min), grid_min


def _make_objective(
    rate: RateFunction, scale: float, shift_log: Callable[[np.ndarray], np.ndarray],
    arg_scale: float = 1.0,
) -> Callable:
    """scale * I(arg_scale * r) - shift_log(r), usable on scalars and arrays."""

    def f(r):
        if isinstance(r, np.ndarray):
            return scale * rate.value_array(arg_scale * r) - shift_log(r)
        return scale * rate.value(arg_scale * r) - float(shift_log(r))

    return f


def _verify_infimum(
    label: str,
    objective: Callable[[float], float],
    solver_value: float,
    lo: float,
    hi: float,
    tol: float,
) -> None:
    refined, grid_min = _direct_infimum(objective, lo, hi)
    if grid_min < solver_value - _GRID_TRIPWIRE:
        raise ConsistencyError(
            f"{label}: grid minimum {grid_min!r} undercuts solver value {solver_value!r}"
        )
    if abs(refined - solver_value) > tol:
        raise ConsistencyError(
            f"{label}: direct minimization {refined!r} differs from solver {solver_value!r}"
        )


# ---------------------------------------------------------------------------
# The three thresholds
# ---------------------------------------------------------------------------


def tau_volume(rate: RateFunction, verify: bool = True) -> float:
    """Volume-fraction threshold (nats)."""
    r_v, _ = solve_optimal_radius(rate, Target.VOLUME_FRACTION)
    core = rate.value(r_v) - math.log(r_v)
    if verify:
        _verify_infimum(
            "tau_volume",
            _make_objective(rate, 1.0, np.log),
            core,
            rate.rstar,
            rate.domain_hi,
            1e-9,
        )
    return MINUS_HALF_LOG_2PIE + core


def tau_degree(rate: RateFunction, verify: bool = True) -> float:
    """Degree threshold (nats); computed in both equivalent forms."""
    r_d, _ = solve_optimal_radius(rate, Target.DEGREE)
    core_b = 2.0 * rate.value(r_d) - math.log(2.0 * r_d)
    # alternative form: minimize over the summed radius u = 2R
    if rate.domain_hi == rate.domain_lo:
        core_a = 2.0 * rate.value(rate.rstar) - math.log(2.0 * rate.rstar)
    else:
        core_a, _ = _direct_infimum(
            _make_objective(rate, 2.0, np.log, arg_scale=0.5),
            2.0 * rate.rstar,
            2.0 * rate.domain_hi,
        )
    if abs(core_a - core_b) > 1e-10:
        raise ConsistencyError(
            f"degree threshold forms disagree: {core_a!r} vs {core_b!r}"
        )
    if verify:
        _verify_infimum(
            "tau_degree",
            _make_objective(rate, 2.0, lambda r: np.log(2.0 * r)),
            core_b,
            rate.rstar,
            rate.domain_hi,
            1e-10,
        )
    return MINUS_HALF_LOG_2PIE + core_b


def tau_percolation(rate: RateFunction, verify: bool = True) -> float:
    """Percolation threshold (nats)."""
    r_p, _ = solve_optimal_radius(rate, Target.PERCOLATION)
    core = rate.value(r_p) - math.log(r_p + rate.rstar)
    if verify:
        _verify_infimum(
            "tau_percolation",
            _make_objective(rate, 1.0, lambda r: np.log(r + rate.rstar)),
            core,
            rate.rstar,
            rate.domain_hi,
            1e-9,
        )
    val = MINUS_HALF_LOG_2PIE + core
    if rate.domain_lo == rate.domain_hi:
        # deterministic radii: percolation and degree thresholds coincide
        td = tau_degree(rate, verify=False)
        if abs(val - td) > 1e-12:
            raise ConsistencyError(
                f"deterministic tau_p {val!r} != tau_d {td!r}"
            )
    return val


def solve_gaussian_cubic(tol: float = 1e-12) -> float:
    """Root in (1, 2) of c^3 + c^2 - 2c - 1 = 0 (Gaussian percolation radius / sigma)."""

    def p(c: float) -> float:
        return ((c + 1.0) * c - 2.0) * c - 1.0

    lo, hi = 1.0, 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if p(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Aggregate report
# ---------------------------------------------------------------------------

_REGIME_TOL = 1e-12


def _classify_regime(rho: float, tau_d: float, tau_p: float, tau_v: float) -> str:
    if any(abs(rho - t) <= _REGIME_TOL for t in (tau_d, tau_p, tau_v)):
        return "critical (undetermined)"
    if rho < tau_d:
        return "isolated"
    if rho < tau_p:
        return "non-percolating-dense"
    if rho < tau_v:
        return "percolating-zero-volume"
    return "covered"


def report(spec: RadiusLawSpec, rho: float, verify: bool = True) -> ThresholdReport:
    """Compute all three thresholds and radii with certificates for one model."""
    if math.isnan(rho) or rho == INF:
        raise ValidationError(f"rho must be a real number (or -inf), got {rho}")
    rate = build_rate(spec)
    r_v, cert_v = solve_optimal_radius(rate, Target.VOLUME_FRACTION)
    r_d, cert_d = solve_optimal_radius(rate, Target.DEGREE)
    r_p, cert_p = solve_optimal_radius(rate, Target.PERCOLATION)
    tv = tau_volume(rate, verify=verify)
    td = tau_degree(rate, verify=verify)
    tp = tau_percolation(rate, verify=verify)

    tol = 1e-10
    if not (td <= tp + tol and tp <= tv + tol):
        raise ConsistencyError(f"threshold ordering violated: {td!r}, {tp!r}, {tv!r}")
    rstar = rate.rstar
    chain = (rstar, r_d, r_p, r_v, r_p + rstar, 2.0 * r_d)
    for a, b in zip(chain, chain[1:]):
        if a > b + tol * max(1.0, abs(b)):
            raise ConsistencyError(f"radius ordering violated: {chain!r}")

    return ThresholdReport(
        rho=rho,
        tau_d=td,
        tau_p=tp,
        tau_v=tv,
        r_d=r_d,
        r_p=r_p,
        r_v=r_v,
        rstar=rstar,
        regime=_classify_regime(rho, td, tp, tv),
        certificates={"degree": cert_d, "percolation": cert_p, "volume": cert_v},
    )
