"""Rate-function construction, Legendre transform, and validation."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boolthresh.errors import ValidationError
from boolthresh.rate import (
    Deterministic,
    FromLogMgf,
    GaussianGrain,
    TabulatedConvex,
    build_rate,
    check_moment_condition,
    gaussian_log_mgf,
    gaussian_rate_value,
    golden_section_max,
    golden_section_min,
    legendre_transform,
    radius_law_from_dict,
    validate_law,
)

INF = float("inf")


# ---------------------------------------------------------------------------
# Golden section
# ---------------------------------------------------------------------------


def test_golden_section_min_quadratic():
    x, v = golden_section_min(lambda x: (x - 1.7) ** 2 + 3.0, 0.0, 5.0)
    # argmin of a smooth parabola is only resolvable to ~sqrt(eps)
    assert abs(x - 1.7) < 1e-7
    assert abs(v - 3.0) < 1e-12


def test_golden_section_max_matches_min():
    x, v = golden_section_max(lambda x: -abs(x - 0.25), 0.0, 1.0)
    assert abs(x - 0.25) < 1e-9
    assert abs(v) < 1e-9


@given(st.floats(-5.0, 5.0), st.floats(0.1, 10.0))
@settings(max_examples=50, deadline=None)
def test_golden_section_min_random_parabola(center, scale):
    lo, hi = center - 2 * scale, center + 3 * scale
    x, v = golden_section_min(lambda t: scale * (t - center) ** 2, lo, hi)
    assert abs(x - center) < 1e-7 * max(1.0, abs(center))


# ---------------------------------------------------------------------------
# Gaussian rate function
# ---------------------------------------------------------------------------


def test_gaussian_rate_zero_at_sigma():
    for sigma in (0.5, 1.0, 2.3):
        rate = build_rate(GaussianGrain(sigma=sigma))
        assert rate.rstar == pytest.approx(sigma)
        assert rate.value(sigma) == pytest.approx(0.0, abs=1e-14)
        assert rate.dminus(sigma) == pytest.approx(0.0, abs=1e-14)
        assert rate.dplus(sigma) == pytest.approx(0.0, abs=1e-14)


def test_gaussian_rate_closed_form():
    rate = build_rate(GaussianGrain(sigma=1.5))
    for r in (0.3, 1.0, 1.5, 2.0, 7.0):
        expect = r**2 / (2 * 1.5**2) - 0.5 - 0.5 * math.log(r**2 / 1.5**2)
        assert rate.value(r) == pytest.approx(expect, rel=1e-14)
        assert rate.dminus(r) == pytest.approx(r / 1.5**2 - 1.0 / r, abs=1e-14)


def test_gaussian_rate_diverges_at_zero():
    rate = build_rate(GaussianGrain(sigma=1.0))
    assert rate.value(0.0) == INF
    assert rate.value(-1.0) == INF


def test_gaussian_rate_value_vectorized():
    rs = np.array([0.5, 1.0, 2.0])
    vals = gaussian_rate_value(1.0, rs)
    assert vals.shape == (3,)
    assert vals[1] == pytest.approx(0.0, abs=1e-15)


# ---------------------------------------------------------------------------
# Legendre transform against the Gaussian log-MGF
# ---------------------------------------------------------------------------


def test_legendre_of_gaussian_log_mgf_recovers_rate():
    """sup_theta(theta*r - Lambda(theta)) must equal the closed-form rate."""
    sigma = 1.3
    lam = lambda th: gaussian_log_mgf(sigma, th)
    for r in (1.3, 1.5, 2.0, 4.0):
        got = legendre_transform(lam, r)
        assert got == pytest.approx(gaussian_rate_value(sigma, r), abs=1e-9)


def test_legendre_rejects_nonpositive_radius():
    with pytest.raises(ValidationError):
        legendre_transform(lambda th: th**2 / 2, 0.0)


def test_from_log_mgf_matches_gaussian():
    sigma = 0.8
    spec = FromLogMgf(log_mgf=lambda th: gaussian_log_mgf(sigma, th))
    rate = build_rate(spec)
    assert rate.rstar == pytest.approx(sigma, abs=1e-6)
    for r in (1.0, 1.4, 2.5):
        assert rate.value(r) == pytest.approx(gaussian_rate_value(sigma, r), abs=1e-8)
        closed = r / sigma**2 - 1.0 / r
        assert rate.dplus(r) == pytest.approx(closed, abs=1e-6)


# ---------------------------------------------------------------------------
# Deterministic and tabulated laws
# ---------------------------------------------------------------------------


def test_deterministic_rate_is_indicator():
    rate = build_rate(Deterministic(rstar=2.0))
    assert rate.value(2.0) == 0.0
    assert rate.value(1.9) == INF
    assert rate.value(2.1) == INF
    assert rate.dminus(2.0) == -INF
    assert rate.dplus(2.0) == INF


def test_tabulated_piecewise_linear():
    knots = ((0.5, 1.0), (1.0, 0.0), (2.0, 1.0), (3.0, 4.0))
    rate = build_rate(TabulatedConvex(knots=knots))
    assert rate.rstar == pytest.approx(1.0)
    assert rate.value(1.5) == pytest.approx(0.5)
    assert rate.value(2.5) == pytest.approx(2.5)
    # kink at the interior knot
    assert rate.dminus(2.0) == pytest.approx(1.0)
    assert rate.dplus(2.0) == pytest.approx(3.0)
    # outside the table the function is +inf
    assert rate.value(0.4) == INF
    assert rate.value(3.1) == INF


def test_tabulated_rejects_nonconvex():
    knots = ((0.5, 1.0), (1.0, 0.0), (2.0, 3.0), (3.0, 3.5))
    with pytest.raises(ValidationError):
        validate_law(TabulatedConvex(knots=knots))


def test_tabulated_rejects_no_zero():
    knots = ((0.5, 1.0), (1.0, 0.5), (2.0, 1.0))
    with pytest.raises(ValidationError):
        validate_law(TabulatedConvex(knots=knots))


def test_validate_rejects_bad_scalars():
    with pytest.raises(ValidationError):
        validate_law(Deterministic(rstar=-1.0))
    with pytest.raises(ValidationError):
        validate_law(GaussianGrain(sigma=0.0))


# ---------------------------------------------------------------------------
# Moment condition and dict round trip
# ---------------------------------------------------------------------------


def test_moment_condition_gaussian():
    rep = check_moment_condition(GaussianGrain(sigma=2.0))
    assert rep.satisfied
    assert rep.gamma == 2.0


def test_moment_condition_from_log_mgf():
    rep = check_moment_condition(FromLogMgf(log_mgf=lambda th: gaussian_log_mgf(1.0, th)))
    assert rep.satisfied


def test_radius_law_from_dict_variants():
    d = radius_law_from_dict({"variant": "deterministic", "rstar": 1.5})
    assert isinstance(d, Deterministic) and d.rstar == 1.5
    g = radius_law_from_dict({"variant": "gaussian", "sigma": 0.7})
    assert isinstance(g, GaussianGrain) and g.sigma == 0.7
    t = radius_law_from_dict(
        {"variant": "tabulated", "knots": [[0.5, 1.0], [1.0, 0.0], [2.0, 2.0]]}
    )
    assert isinstance(t, TabulatedConvex)
    with pytest.raises(ValidationError):
        radius_law_from_dict({"variant": "unknown"})
