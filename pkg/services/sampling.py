"""
Seeded random profile generators for the estimate and cone harnesses.
"""

from typing import List

import numpy as np
from scipy.interpolate import CubicSpline

from core.model import ProfilePair, RadialGrid, pair_norm

SPLINE_KNOTS = 8
CONE_POWERS = (2, 3, 4, 5)


def trial_generators(seed: int, trials: int) -> List[np.random.Generator]:
    """One independent generator per trial, reproducible from a single seed."""
    children = np.random.SeedSequence(seed).spawn(trials)
    return [np.random.default_rng(child) for child in children]


def sample_ball_profile(
    rng: np.random.Generator,
    grid: RadialGrid,
    d: float,
    rho: float,
) -> ProfilePair:
    """Random smooth profile Q = r^d g(r) scaled into the ball ||Q|| <= rho.

    g is a cubic spline through uniform random values; the norm of the result is
    a uniform random fraction of rho.
    """
    knots = np.linspace(0.0, 1.0, SPLINE_KNOTS)
    spline = CubicSpline(knots, rng.uniform(0.0, 1.0, SPLINE_KNOTS))
    r = grid.nodes

    g = spline(r)
    gprime = spline.derivative()(r)
    shape = ProfilePair(
        grid=grid,
        q=r ** d * g,
        qprime=d * r ** (d - 1.0) * g + r ** d * gprime,
    )

    fraction = rng.uniform(0.0, 1.0)
    size = pair_norm(shape, d)
    if size == 0.0:
        return ProfilePair.zeros(grid)
    return shape.scaled(fraction * rho / size)


def sample_cone_profile(
    rng: np.random.Generator,
    grid: RadialGrid,
    d: float,
    m: float,
) -> ProfilePair:
    """Random profile in the cone: Q = m r^{d-2} h(r), h nondecreasing with h(1) = 1."""
    coefficients = rng.uniform(0.0, 1.0, len(CONE_POWERS))
    coefficients /= coefficients.sum()
    r = grid.nodes

    exponents = [k + d - 2.0 for k in CONE_POWERS]
    q = sum(c * r ** e for c, e in zip(coefficients, exponents))
    qprime = sum(c * e * r ** (e - 1.0) for c, e in zip(coefficients, exponents))
    return ProfilePair(grid=grid, q=m * q, qprime=m * qprime)
