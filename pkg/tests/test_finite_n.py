"""Finite-dimension quantities: oracles, closed forms, and scans."""
import math

import numpy as np
import pytest
from scipy.special import gammaln, logsumexp

from boolthresh.errors import ValidationError
from boolthresh.finite_n import (
    ModelSpec,
    QuadratureConfig,
    coverage_probability,
    exponent_scan,
    gaussian_chi_log_moment,
    gaussian_radius_log_density,
    log_ball_volume,
    log_integral,
    log_mean_indegree,
    log_mean_palm_degree,
    log_radius_moment,
    log_radius_tail,
    log_shifted_radius_moment,
)
from boolthresh.rate import Deterministic, GaussianGrain, TabulatedConvex
from boolthresh.thresholds import MINUS_HALF_LOG_2PIE

CFG = QuadratureConfig()


# ---------------------------------------------------------------------------
# Ball volume and generic quadrature
# ---------------------------------------------------------------------------


def test_ball_volume_small_n():
    assert log_ball_volume(1, 3.0) == pytest.approx(math.log(6.0), abs=1e-14)
    assert log_ball_volume(2, 2.0) == pytest.approx(math.log(4 * math.pi), abs=1e-14)
    assert log_ball_volume(3, 1.0) == pytest.approx(math.log(4 * math.pi / 3), abs=1e-14)


def test_ball_volume_huge_n_no_overflow():
    v = log_ball_volume(10**6, math.sqrt(10**6))
    assert math.isfinite(v)
    # (1/n) log V_n(sqrt(n)) -> (1/2) log(2 pi e)
    assert v / 10**6 == pytest.approx(0.5 * math.log(2 * math.pi * math.e), abs=1e-5)


def test_log_integral_gaussian_mass():
    # integral of exp(-x^2/2) over R is sqrt(2 pi); tails beyond the
    # 60-nat cut contribute less than 1e-26
    got = log_integral(lambda x: -0.5 * x * x, 0.0, -40.0, float("inf"), CFG)
    assert got == pytest.approx(0.5 * math.log(2 * math.pi), abs=1e-10)


# ---------------------------------------------------------------------------
# Gaussian radius law: density and moments
# ---------------------------------------------------------------------------


def test_gaussian_radius_density_normalizes():
    from scipy.integrate import quad

    for n, sigma in ((2, 1.0), (5, 0.7), (50, 2.0)):
        total, _ = quad(
            lambda x: math.exp(gaussian_radius_log_density(n, sigma, x)),
            0.0,
            sigma * 10.0,
            limit=200,
        )
        assert total == pytest.approx(1.0, abs=1e-9)


def test_chi_moment_closed_form_small_cases():
    # n = 2: X is Rayleigh(sigma/sqrt(2)); E[X^2] = sigma^2
    assert gaussian_chi_log_moment(2, 1.0, 2) == pytest.approx(0.0, abs=1e-14)
    # E[X] for n=2: sigma*sqrt(pi)/2
    assert gaussian_chi_log_moment(2, 1.0, 1) == pytest.approx(
        math.log(math.sqrt(math.pi) / 2), abs=1e-14
    )


def test_quadrature_moment_matches_closed_form():
    for n in (2, 10, 50, 200, 1000):
        got = log_radius_moment(GaussianGrain(1.0), n, CFG)
        assert got == pytest.approx(gaussian_chi_log_moment(n, 1.0, n), abs=1e-10)


def test_moments_by_direct_mc():
    """10^7-draw Monte Carlo check of the chi-scaled moment at n=2."""
    rng = np.random.default_rng(777)
    x = np.sqrt(rng.chisquare(2, size=10**7) / 2.0)
    for k in (1, 2, 4):
        mc = float(np.mean(x**k))
        closed = math.exp(gaussian_chi_log_moment(2, 1.0, k))
        assert mc == pytest.approx(closed, rel=5e-3)


def test_radius_tail():
    # P(X >= 0) = 1
    assert log_radius_tail(GaussianGrain(1.0), 5, 0.0, CFG) == pytest.approx(0.0, abs=1e-12)
    # chi-square tail at n=2: P(X >= t) = exp(-t^2)  [X^2 = chi^2_2/2]
    t = 1.3
    assert log_radius_tail(GaussianGrain(1.0), 2, t, CFG) == pytest.approx(
        -(t**2), abs=1e-9
    )
    # deterministic: indicator
    assert log_radius_tail(Deterministic(1.0), 3, 0.5, CFG) == 0.0
    assert log_radius_tail(Deterministic(1.0), 3, 1.5, CFG) == -math.inf


# ---------------------------------------------------------------------------
# Palm degree: binomial-expansion oracle
# ---------------------------------------------------------------------------


def _palm_two_sided_moment_oracle(n: int, sigma: float) -> float:
    """log E[(X + X')^n] via the binomial theorem and chi moments."""
    ks = np.arange(n + 1)
    log_binom = gammaln(n + 1) - gammaln(ks + 1) - gammaln(n - ks + 1)
    mom = np.array([gaussian_chi_log_moment(n, sigma, int(k)) for k in ks])
    mom_rev = mom[::-1]
    return float(logsumexp(log_binom + mom + mom_rev))


@pytest.mark.parametrize("n", [2, 5, 10, 50, 200])
def test_palm_degree_matches_binomial_oracle(n):
    sigma = 1.0
    spec = ModelSpec(rho=-1.0, radius_law=GaussianGrain(sigma))
    got = log_mean_palm_degree(spec, n, CFG)
    expect = (
        n * (-1.0)
        + log_ball_volume(n, math.sqrt(n))
        + _palm_two_sided_moment_oracle(n, sigma)
    )
    assert got == pytest.approx(expect, abs=1e-8)


def test_palm_degree_deterministic_closed_form():
    spec = ModelSpec(rho=0.25, radius_law=Deterministic(rstar=1.5))
    n = 30
    expect = n * 0.25 + log_ball_volume(n, math.sqrt(n)) + n * math.log(3.0)
    assert log_mean_palm_degree(spec, n, CFG) == pytest.approx(expect, abs=1e-12)


def test_shifted_moment_matches_binomial():
    # E[(s + X)^n] by binomial expansion
    n, sigma, s = 12, 1.0, 0.8
    ks = np.arange(n + 1)
    log_binom = gammaln(n + 1) - gammaln(ks + 1) - gammaln(n - ks + 1)
    mom = np.array([gaussian_chi_log_moment(n, sigma, int(k)) for k in ks])
    expect = float(logsumexp(log_binom + mom + (n - ks) * math.log(s)))
    got = log_shifted_radius_moment(GaussianGrain(sigma), n, s, CFG)
    assert got == pytest.approx(expect, abs=1e-10)


# ---------------------------------------------------------------------------
# Coverage and degree at exact small-n constants
# ---------------------------------------------------------------------------


def test_deterministic_n2_constants():
    """rho = 0, R* = 1, n = 2: lambda = 2*pi, Palm degree = 8*pi."""
    spec = ModelSpec(rho=0.0, radius_law=Deterministic(rstar=1.0))
    assert log_mean_indegree(spec, 2, CFG) == pytest.approx(math.log(2 * math.pi), abs=1e-14)
    assert log_mean_palm_degree(spec, 2, CFG) == pytest.approx(
        math.log(8 * math.pi), abs=1e-14
    )
    prob, point = coverage_probability(spec, 2, CFG)
    assert prob == pytest.approx(1.0 - math.exp(-2 * math.pi), abs=1e-14)
    assert point.n == 2


def test_coverage_empty_model():
    spec = ModelSpec(rho=-math.inf, radius_law=Deterministic(rstar=1.0))
    prob, _ = coverage_probability(spec, 5, CFG)
    assert prob == 0.0


def test_coverage_extremes_stable():
    # deeply supercritical: probability saturates at 1 without overflow
    spec = ModelSpec(rho=2.0, radius_law=Deterministic(rstar=1.0))
    prob, point = coverage_probability(spec, 500, CFG)
    assert prob == 1.0
    assert math.isfinite(point.log_lambda_n)
    # deeply subcritical: log-domain probability matches log lambda
    spec2 = ModelSpec(rho=-5.0, radius_law=Deterministic(rstar=1.0))
    prob2, point2 = coverage_probability(spec2, 500, CFG)
    assert prob2 == pytest.approx(math.exp(point2.log_lambda_n), abs=1e-300)
    assert point2.coverage_log_or_loglog == pytest.approx(point2.log_lambda_n)


# ---------------------------------------------------------------------------
# Scan
# ---------------------------------------------------------------------------


def test_exponent_scan_targets_and_order():
    spec = ModelSpec(rho=-2.0, radius_law=GaussianGrain(1.0))
    res = exponent_scan(spec, [10, 20, 40], CFG)
    assert [p.n for p in res.points] == [10, 20, 40]
    errs = [abs(p.exponent_vf - res.target_vf) for p in res.points]
    assert errs == sorted(errs, reverse=True)


def test_exponent_scan_parallel_matches_serial():
    spec = ModelSpec(rho=-2.0, radius_law=GaussianGrain(1.0))
    serial = exponent_scan(spec, [5, 15], CFG, jobs=1)
    parallel = exponent_scan(spec, [5, 15], CFG, jobs=2)
    assert serial.points == parallel.points


def test_exponent_scan_rejects_bad_n_list():
    spec = ModelSpec(rho=-2.0, radius_law=GaussianGrain(1.0))
    with pytest.raises(ValidationError):
        exponent_scan(spec, [], CFG)
    with pytest.raises(ValidationError):
        exponent_scan(spec, [10, 10], CFG)
    with pytest.raises(ValidationError):
        exponent_scan(spec, [20, 10], CFG)


def test_finite_n_rejects_laws_without_distribution():
    law = TabulatedConvex(knots=((0.5, 1.0), (1.0, 0.0), (2.0, 2.0)))
    with pytest.raises(ValidationError):
        log_radius_moment(law, 5, CFG)
