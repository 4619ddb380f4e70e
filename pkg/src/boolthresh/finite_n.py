"""Exact finite-dimension quantities of the Boolean model, in log domain.

For a model family with normalized log-intensity rho_n and radius law
X_n (normalized radii), the mean in-degree of the origin under the Palm
version is

    lambda_n = exp(n rho_n) * V_n(sqrt(n)) * E[X_n^n],

the coverage probability is 1 - exp(-lambda_n) (the in-degree count is
Poisson), and the Palm mean degree replaces E[X_n^n] by the two-sided
moment E[(X_n + X_n')^n] with an independent copy X_n'.

Everything is kept as logarithms end to end; exponentials are only
formed inside max-shifted quadrature, so dimensions up to 10^6 pose no
overflow risk.  Finite-n laws are defined for the deterministic and
Gaussian-grain radius specs; a rate function alone does not determine a
finite-n distribution, so other specs are rejected here.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from scipy.integrate import quad
from scipy.special import gammaln

from . import thresholds
from .errors import ConsistencyError, QuadratureError, ValidationError
from .rate import Deterministic, GaussianGrain, RadiusLawSpec, build_rate, validate_law

INF = math.inf

LOG_PI = math.log(math.pi)


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances for the log-domain radius integrals."""

    rtol: float = 1e-10
    tail_nats: float = 60.0  # cut integrand support this far below its peak
    max_subdivisions: int = 200

    def __post_init__(self):
        if not self.rtol > 0:
            raise ValidationError(f"rtol must be positive, got {self.rtol}")


@dataclass(frozen=True)
class ModelSpec:
    """One family of Boolean models across dimensions.

    ``rho`` is the asymptotic normalized log-intensity in nats; ``rho = -inf``
    is the empty-model flag (intensity zero in every dimension).
    ``rho_n_rule`` optionally maps each dimension to its own log-intensity;
    the default is the constant rule rho_n = rho.
    """

    rho: float
    radius_law: RadiusLawSpec
    rho_n_rule: Optional[Callable[[int], float]] = None

    def __post_init__(self):
        if math.isnan(self.rho) or self.rho == INF:
            raise ValidationError(f"rho must be finite or -inf, got {self.rho}")
        validate_law(self.radius_law)

    def rho_n(self, n: int) -> float:
        if self.rho_n_rule is None:
            return self.rho
        return self.rho_n_rule(n)


@dataclass(frozen=True)
class FiniteNPoint:
    n: int
    log_lambda_n: float
    coverage: float
    coverage_log_or_loglog: float
    log_mean_degree: float
    exponent_vf: float
    exponent_deg: float


@dataclass(frozen=True)
class ScanResult:
    points: tuple[FiniteNPoint, ...]
    target_vf: float  # rho - tau_v
    target_deg: float  # rho - tau_d


def log_ball_volume(n: int, r: float) -> float:
    """log of the volume of the n-ball of radius r, via log-gamma."""
    if n < 1 or int(n) != n:
        raise ValidationError(f"dimension must be a positive integer, got {n}")
    if not r > 0:
        raise ValidationError(f"radius must be positive, got {r}")
    return 0.5 * n * LOG_PI - gammaln(0.5 * n + 1.0) + n * math.log(r)


# ---------------------------------------------------------------------------
# Log-domain quadrature
# ---------------------------------------------------------------------------


def _cut_point(logf, inside: float, outside: float, threshold: float) -> float:
    """Point between inside (above threshold) and outside (below) where logf crosses."""
    for _ in range(200):
        mid = 0.5 * (inside + outside)
        if logf(mid) >= threshold:
            inside = mid
        else:
            outside = mid
        if abs(outside - inside) <= 1e-12 * max(1.0, abs(inside)):
            break
    return outside


def log_integral(
    logf: Callable[[float], float],
    peak: float,
    lo: float,
    hi: float,
    cfg: QuadratureConfig,
) -> float:
    """log of the integral of exp(logf) over [lo, hi], max-shifted.

    ``peak`` must be a point at (or near) the integrand maximum; the
    support is truncated where logf falls ``cfg.tail_nats`` below it.
    """
    m = logf(peak)
    if not math.isfinite(m):
        raise QuadratureError(f"integrand peak not finite at {peak}")
    threshold = m - cfg.tail_nats

    a = lo
    if logf(max(lo, 1e-300)) < threshold:
        a = _cut_point(logf, peak, lo, threshold)
    if math.isinf(hi):
        b = 2.0 * peak + 1.0
        while logf(b) >= threshold:
            b = 2.0 * b
            if b > 1e15:
                raise QuadratureError("integrand right tail never falls below cutoff")
        b = _cut_point(logf, peak, b, threshold)
    else:
        b = hi
        if logf(hi) < threshold:
            b = _cut_point(logf, peak, hi, threshold)

    epsrel = max(cfg.rtol * 1e-2, 1e-13)
    val, err = quad(
        lambda x: math.exp(logf(x) - m),
        a,
        b,
        epsabs=0.0,
        epsrel=epsrel,
        limit=cfg.max_subdivisions,
    )
    if val <= 0.0 or err > cfg.rtol * val:
        raise QuadratureError(
            f"quadrature achieved relative error {err / max(val, 1e-300):.3g}, "
            f"requested {cfg.rtol:.3g}"
        )
    return m + math.log(val)


# ---------------------------------------------------------------------------
# Gaussian-grain finite-n law
# ---------------------------------------------------------------------------


def gaussian_radius_log_density(n: int, sigma: float, x: float) -> float:
    """log density of the normalized radius sigma * chi_n / sqrt(n)."""
    if x <= 0.0:
        return -INF
    t = math.sqrt(n) * x / sigma
    return (
        (n - 1.0) * math.log(t)
        - 0.5 * t * t
        - (0.5 * n - 1.0) * math.log(2.0)
        - gammaln(0.5 * n)
        + 0.5 * math.log(n)
        - math.log(sigma)
    )


def gaussian_chi_log_moment(n: int, sigma: float, k: float) -> float:
    """Closed form log E[X_n^k] for the Gaussian-grain normalized radius."""
    return (
        k * math.log(sigma / math.sqrt(n))
        + 0.5 * k * math.log(2.0)
        + gammaln(0.5 * (n + k))
        - gammaln(0.5 * n)
    )


def _gaussian_log_moment_quad(n: int, sigma: float, k: float, cfg: QuadratureConfig) -> float:
    def logf(x: float) -> float:
        if x <= 0.0:
            return -INF
        return k * math.log(x) + gaussian_radius_log_density(n, sigma, x)

    peak = sigma * math.sqrt((k + n - 1.0) / n)
    return log_integral(logf, peak, 0.0, INF, cfg)


def _gaussian_log_shifted_moment(
    n: int, sigma: float, shift: float, cfg: QuadratureConfig
) -> float:
    """log E[(X_n + shift)^n] for the Gaussian-grain law, shift >= 0."""

    def logf(y: float) -> float:
        if y <= 0.0:
            return -INF
        return n * math.log(shift + y) + gaussian_radius_log_density(n, sigma, y)

    # peak solves n/(shift+y) + (n-1)/y = n y / sigma^2, decreasing in y
    def slope(y: float) -> float:
        return n / (shift + y) + (n - 1.0) / y - n * y / (sigma * sigma)

    lo, hi = 1e-12, sigma * 2.0
    while slope(hi) > 0.0:
        hi *= 2.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if slope(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return log_integral(logf, 0.5 * (lo + hi), 0.0, INF, cfg)


def _gaussian_log_tail(n: int, sigma: float, t: float, cfg: QuadratureConfig) -> float:
    """log P(X_n >= t), exact at finite n (not the rate-function exponent)."""
    if t <= 0.0:
        return 0.0

    def logf(x: float) -> float:
        return gaussian_radius_log_density(n, sigma, x)

    mode = sigma * math.sqrt(max(n - 1.0, 1e-12) / n)
    peak = max(t, mode)
    log_tail = log_integral(logf, peak, t, INF, cfg)
    return min(log_tail, 0.0)


# ---------------------------------------------------------------------------
# Radius-law dispatch
# ---------------------------------------------------------------------------


def _require_finite_n_law(law: RadiusLawSpec) -> None:
    if not isinstance(law, (Deterministic, GaussianGrain)):
        raise ValidationError(
            "finite-n quantities need an explicit per-dimension radius law; "
            f"{type(law).__name__} only specifies the asymptotic rate function"
        )


def log_radius_moment(law: RadiusLawSpec, n: int, cfg: QuadratureConfig) -> float:
    """log E[X_n^n]; Gaussian quadrature is cross-checked against the chi moment."""
    _require_finite_n_law(law)
    if isinstance(law, Deterministic):
        return n * math.log(law.rstar)
    by_quad = _gaussian_log_moment_quad(n, law.sigma, float(n), cfg)
    closed = gaussian_chi_log_moment(n, law.sigma, float(n))
    if abs(by_quad - closed) > 1e-10 * max(1.0, abs(closed)):
        raise ConsistencyError(
            f"Gaussian moment quadrature {by_quad!r} disagrees with chi closed form {closed!r}"
        )
    return by_quad


def log_shifted_radius_moment(
    law: RadiusLawSpec, n: int, shift: float, cfg: QuadratureConfig
) -> float:
    """log E[(X_n + shift)^n]."""
    _require_finite_n_law(law)
    if isinstance(law, Deterministic):
        return n * math.log(law.rstar + shift)
    return _gaussian_log_shifted_moment(n, law.sigma, shift, cfg)


def log_radius_tail(law: RadiusLawSpec, n: int, t: float, cfg: QuadratureConfig) -> float:
    """log P(X_n >= t)."""
    _require_finite_n_law(law)
    if isinstance(law, Deterministic):
        return 0.0 if t <= law.rstar else -INF
    return _gaussian_log_tail(n, law.sigma, t, cfg)


def radius_support_hi(law: RadiusLawSpec, n: int, cfg: QuadratureConfig) -> float:
    """Upper end of the n-th moment integrand support (tail-cut radius)."""
    _require_finite_n_law(law)
    if isinstance(law, Deterministic):
        return law.rstar
    sigma = law.sigma

    def logf(x: float) -> float:
        if x <= 0.0:
            return -INF
        return n * math.log(x) + gaussian_radius_log_density(n, sigma, x)

    peak = sigma * math.sqrt((2.0 * n - 1.0) / n)
    threshold = logf(peak) - cfg.tail_nats
    b = 2.0 * peak
    while logf(b) >= threshold:
        b *= 2.0
    return _cut_point(logf, peak, b, threshold)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def log_mean_indegree(
    spec: ModelSpec, n: int, cfg: QuadratureConfig = QuadratureConfig()
) -> float:
    """log lambda_n = n rho_n + log V_n(sqrt(n)) + log E[X_n^n]."""
    rho_n = spec.rho_n(n)
    if rho_n == -INF:
        return -INF
    return n * rho_n + log_ball_volume(n, math.sqrt(n)) + log_radius_moment(
        spec.radius_law, n, cfg
    )


def log_mean_palm_degree(
    spec: ModelSpec, n: int, cfg: QuadratureConfig = QuadratureConfig()
) -> float:
    """log E0[D_n] = n rho_n + log V_n(sqrt(n)) + log E[(X_n + X_n')^n].

    The two-sided moment uses iterated adaptive 1-D quadrature in log
    domain; the deterministic law collapses both dimensions analytically.
    """
    rho_n = spec.rho_n(n)
    if rho_n == -INF:
        return -INF
    law = spec.radius_law
    _require_finite_n_law(law)
    prefix = n * rho_n + log_ball_volume(n, math.sqrt(n))
    if isinstance(law, Deterministic):
        return prefix + n * math.log(2.0 * law.rstar)

    sigma = law.sigma
    inner_cfg = QuadratureConfig(
        rtol=max(cfg.rtol * 0.1, 1e-12),
        tail_nats=cfg.tail_nats,
        max_subdivisions=cfg.max_subdivisions,
    )

    def log_outer(x: float) -> float:
        if x <= 0.0:
            return -INF
        return gaussian_radius_log_density(n, sigma, x) + _gaussian_log_shifted_moment(
            n, sigma, x, inner_cfg
        )

    # outer peak sits near the symmetric saddle x = sigma*sqrt(3/2 - 1/n)
    guess = sigma * math.sqrt(max(1.5 - 1.0 / n, 0.5))
    from .rate import golden_section_max

    peak, _ = golden_section_max(
        log_outer, guess / 8.0, guess * 8.0, xtol=1e-9 * sigma
    )
    return prefix + log_integral(log_outer, peak, 0.0, INF, cfg)


def coverage_probability(
    spec: ModelSpec,
    n: int,
    cfg: QuadratureConfig = QuadratureConfig(),
    tau_v: Optional[float] = None,
) -> tuple[float, FiniteNPoint]:
    """Coverage probability of the origin and the associated scan point.

    The in-degree of the origin is Poisson, so the coverage probability
    is exactly 1 - exp(-lambda_n); it is evaluated with expm1 and pure
    log-domain shortcuts at the extremes.
    """
    log_lam = log_mean_indegree(spec, n, cfg)
    if tau_v is None:
        tau_v = thresholds.tau_volume(build_rate(spec.radius_law), verify=False)

    if log_lam == -INF:
        prob, log_p = 0.0, -INF
    elif log_lam > math.log(700.0):
        prob, log_p = 1.0, 0.0
    elif log_lam < -30.0:
        # p = lam (1 - lam/2 + ...): correction below 1e-13 nats
        prob, log_p = math.exp(log_lam), log_lam
    else:
        lam = math.exp(log_lam)
        prob = -math.expm1(-lam)
        log_p = math.log(prob)
    if not 0.0 <= prob <= 1.0:
        raise ConsistencyError(f"coverage probability {prob!r} outside [0, 1]")

    supercritical = spec.rho > tau_v
    cov_stat = log_lam if supercritical else log_p
    exponent_vf = cov_stat / n
    point = FiniteNPoint(
        n=n,
        log_lambda_n=log_lam,
        coverage=prob,
        coverage_log_or_loglog=cov_stat,
        log_mean_degree=math.nan,
        exponent_vf=exponent_vf,
        exponent_deg=math.nan,
    )
    return prob, point


def _scan_point(
    spec: ModelSpec, n: int, cfg: QuadratureConfig, tau_v: float
) -> FiniteNPoint:
    _, partial = coverage_probability(spec, n, cfg, tau_v=tau_v)
    log_deg = log_mean_palm_degree(spec, n, cfg)
    return FiniteNPoint(
        n=partial.n,
        log_lambda_n=partial.log_lambda_n,
        coverage=partial.coverage,
        coverage_log_or_loglog=partial.coverage_log_or_loglog,
        log_mean_degree=log_deg,
        exponent_vf=partial.exponent_vf,
        exponent_deg=log_deg / n,
    )


def exponent_scan(
    spec: ModelSpec,
    n_list: Sequence[int],
    cfg: QuadratureConfig = QuadratureConfig(),
    jobs: int = 1,
) -> ScanResult:
    """One FiniteNPoint per dimension, plus the asymptotic exponent targets."""
    if len(n_list) == 0:
        raise ValidationError("n_list must be nonempty")
    if list(n_list) != sorted(set(int(n) for n in n_list)):
        raise ValidationError(f"n_list must be strictly ascending, got {list(n_list)!r}")
    rate = build_rate(spec.radius_law)
    tau_v = thresholds.tau_volume(rate, verify=False)
    tau_d = thresholds.tau_degree(rate, verify=False)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(_scan_point, *zip(*[(spec, n, cfg, tau_v) for n in n_list])))
    else:
        points = [_scan_point(spec, n, cfg, tau_v) for n in n_list]
    return ScanResult(
        points=tuple(points),
        target_vf=spec.rho - tau_v,
        target_deg=spec.rho - tau_d,
    )
