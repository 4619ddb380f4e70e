"""Shared test helpers: randomized convex rate functions with known structure.

The factory builds piecewise-quadratic convex rate functions directly as
``RateFunction`` objects.  The derivative is assembled from random pieces
(slope changes and upward jumps at random knots), so the value, the
one-sided derivatives, and the unique zero are all known analytically —
an independent construction the solver has no knowledge of.
"""
from __future__ import annotations

import numpy as np

from boolthresh.rate import RateFunction

INF = float("inf")


def random_piecewise_quadratic(rng: np.random.Generator) -> RateFunction:
    """Random convex rate function with unique zero and possible kinks.

    Left of the zero ``rstar`` the function is a plain parabola
    ``a_left * (x - rstar)**2 / 2``.  Right of it the derivative is

        d(x) = c0 + a0*(x - rstar) + sum_j a_j*max(0, x - b_j)
                    + sum_j c_j*[x >= b_j]

    with ``a0 > 0``, ``a_j, c_j >= 0`` and knots ``b_j > rstar``, hence
    nondecreasing (convex).  ``c0 >= 0`` puts an optional kink at the zero
    itself, exercising optima pinned at ``rstar``.  The value follows by
    integrating the derivative in closed form.
    """
    rstar = float(rng.uniform(0.3, 3.0))
    a_left = float(rng.uniform(0.2, 5.0))
    a0 = float(rng.uniform(0.05, 5.0))
    c0 = float(rng.uniform(0.0, 1.5)) if rng.random() < 0.3 else 0.0
    n_knots = int(rng.integers(0, 5))
    knots = np.sort(rng.uniform(rstar * 1.01, rstar * 6.0, size=n_knots))
    slope_incr = rng.uniform(0.0, 4.0, size=n_knots)
    jumps = np.where(rng.random(n_knots) < 0.4, rng.uniform(0.0, 2.0, n_knots), 0.0)

    def value(x):
        x = np.asarray(x, dtype=float)
        left = a_left * (x - rstar) ** 2 / 2.0
        t = np.maximum(0.0, x - rstar)
        right = c0 * t + a0 * t**2 / 2.0
        for b, a, c in zip(knots, slope_incr, jumps):
            u = np.maximum(0.0, x - b)
            right = right + a * u**2 / 2.0 + c * u
        out = np.where(x < rstar, left, right)
        return float(out) if out.ndim == 0 else out

    def _deriv(x: float, from_left: bool) -> float:
        if x < rstar or (x == rstar and from_left):
            return a_left * (x - rstar)
        d = c0 + a0 * (x - rstar)
        for b, a, c in zip(knots, slope_incr, jumps):
            d += a * max(0.0, x - b)
            if (x > b) or (x >= b and not from_left):
                d += c
        return d

    return RateFunction(
        rstar=rstar,
        domain_lo=0.0,
        domain_hi=INF,
        _value=value,
        _dminus=lambda x: _deriv(x, True),
        _dplus=lambda x: _deriv(x, False),
    )
