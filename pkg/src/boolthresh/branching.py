"""Desk-scale percolation probe via Poisson Galton-Watson survival.

For deterministic radii, the percolation probability in dimension n
converges to the survival probability of a Galton-Watson process whose
offspring distribution is Poisson with mean

    y_n = exp(n rho_n) * V_n(2 R* sqrt(n)),

the expected number of balls meeting a typical ball.  For random radii
the probe evaluates the same branching bound on a radius-thinned
process: retain only points whose normalized radius is at least a
threshold slightly below the optimal percolation radius, with the tail
probability computed by exact finite-n quadrature rather than its
large-deviations exponent.

This module reports the branching-process quantity that bounds (and in
the deterministic case equals) the limiting percolation probability; it
does not claim to compute the finite-n percolation probability itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from . import thresholds
from .errors import ValidationError
from .finite_n import (
    ModelSpec,
    QuadratureConfig,
    log_ball_volume,
    log_radius_tail,
)
from .rate import Deterministic, build_rate

INF = math.inf

_Y_OVERFLOW = 700.0  # exp(y) representable limit; survival is 1 - exp(-y) beyond


@dataclass(frozen=True)
class BranchingProbe:
    n: int
    log_y_n: float
    survival: float
    thin_radius: Optional[float] = None

    @property
    def y_exponent(self) -> float:
        """(1/n) log y_n, the normalized mean-offspring exponent."""
        return self.log_y_n / self.n


def poisson_gw_survival(y: float, tol: float = 1e-12) -> float:
    """Largest s in [0, 1] with s = 1 - exp(-y s); 0 for y <= 1."""
    if y < 0.0 or math.isnan(y):
        raise ValidationError(f"offspring mean must be nonnegative, got {y}")
    if y <= 1.0:
        return 0.0

    def f(s: float) -> float:
        return -math.expm1(-y * s) - s

    lo, hi = 1e-300, 1.0
    # f(lo) > 0 since f'(0) = y - 1 > 0; f(1) = -exp(-y) < 0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * 1e-3:
            break
    s = 0.5 * (lo + hi)
    # Newton polish to drive the fixed-point residual below tol
    for _ in range(4):
        resid = f(s)
        deriv = y * math.exp(-y * s) - 1.0
        if deriv == 0.0:
            break
        s -= resid / deriv
    s = min(max(s, 0.0), 1.0)
    if abs(f(s)) > tol:
        raise ValidationError(f"fixed point not resolved for y={y}: residual {f(s)!r}")
    return s


def penrose_log_y(spec: ModelSpec, n: int) -> float:
    """log mean offspring for deterministic radii: n rho_n + log V_n(2 R* sqrt(n))."""
    law = spec.radius_law
    if not isinstance(law, Deterministic):
        raise ValidationError(
            "penrose_log_y is defined for deterministic radii; use thinned_log_y"
        )
    rho_n = spec.rho_n(n)
    if rho_n == -INF:
        return -INF
    return n * rho_n + log_ball_volume(n, 2.0 * law.rstar * math.sqrt(n))


def thinned_log_y(
    spec: ModelSpec,
    n: int,
    thin_radius: float,
    ball_radius: float,
    cfg: QuadratureConfig = QuadratureConfig(),
) -> float:
    """log mean offspring of the radius-thinned process.

    n rho_n + log V_n((thin_radius + ball_radius) sqrt(n)) + log P(X_n >= thin_radius),
    the tail probability exact at finite n.
    """
    if thin_radius <= 0 or ball_radius <= 0:
        raise ValidationError("thin_radius and ball_radius must be positive")
    rho_n = spec.rho_n(n)
    if rho_n == -INF:
        return -INF
    log_tail = log_radius_tail(spec.radius_law, n, thin_radius, cfg)
    return (
        n * rho_n
        + log_ball_volume(n, (thin_radius + ball_radius) * math.sqrt(n))
        + log_tail
    )


def default_thinning_slack(rstar: float, r_p: float) -> float:
    """Default slack: min(0.05 R*, (R_p - R*)/2 when positive)."""
    gamma = 0.05 * rstar
    if r_p > rstar:
        gamma = min(gamma, 0.5 * (r_p - rstar))
    return gamma


def survival_from_log_y(log_y: float, tol: float = 1e-12) -> float:
    """GW survival of exp(log_y), clamped to the 1 - exp(-y) bound on overflow."""
    if log_y == -INF:
        return 0.0
    if log_y > _Y_OVERFLOW:
        return 1.0
    return poisson_gw_survival(math.exp(log_y), tol=tol)


def percolation_probe_scan(
    spec: ModelSpec,
    n_list: Sequence[int],
    gamma: Optional[float] = None,
    cfg: QuadratureConfig = QuadratureConfig(),
) -> list[BranchingProbe]:
    """Branching probe across dimensions with the supercritical-proof thinning.

    Thin at R_p - gamma when R_p > R* (at R* - gamma otherwise); the ball
    of the origin is taken at radius R* - gamma.
    """
    if len(n_list) == 0:
        raise ValidationError("n_list must be nonempty")
    rate = build_rate(spec.radius_law)
    rstar = rate.rstar
    r_p, _ = thresholds.solve_optimal_radius(rate, thresholds.Target.PERCOLATION)
    if gamma is None:
        gamma = default_thinning_slack(rstar, r_p)
    if not 0.0 < gamma < rstar:
        raise ValidationError(f"thinning slack must lie in (0, R*), got {gamma}")
    thin = (r_p - gamma) if r_p > rstar else (rstar - gamma)
    ball = rstar - gamma

    probes = []
    for n in n_list:
        log_y = thinned_log_y(spec, n, thin, ball, cfg)
        probes.append(
            BranchingProbe(
                n=int(n),
                log_y_n=log_y,
                survival=survival_from_log_y(log_y),
                thin_radius=thin,
            )
        )
    return probes
