"""
Green kernel, the nonlocal fixed-point operator T and reconstruction of physical fields.

    T Q(r) = m r^d + (1/d) int_0^1 R(Q'(s) s^{1-d} / sigma_d) s^{1-d} Q(s) G(r, s) ds
"""

import logging
from typing import Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from core.exceptions import DomainError, EvaluationError
from core.model import ProblemParams, ProfilePair, RadialGrid

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def _unit_interval(*values):
    arrays = [np.asarray(v, dtype=float) for v in values]
    for a in arrays:
        if np.any((a < 0.0) | (a > 1.0)) or not np.all(np.isfinite(a)):
            raise DomainError("kernel arguments must lie in [0, 1]")
    return arrays


def _scalar_or_array(a: np.ndarray) -> ArrayLike:
    return float(a) if a.ndim == 0 else a


def green(r: ArrayLike, s: ArrayLike, d: float) -> ArrayLike:
    """G(r, s) = r^d (1 - s^d) for r <= s, s^d (1 - r^d) otherwise."""
    r, s = _unit_interval(r, s)
    low = np.minimum(r, s)
    high = np.maximum(r, s)
    return _scalar_or_array(low ** d * (1.0 - high ** d))


def green_dr(r: ArrayLike, s: ArrayLike, d: float) -> ArrayLike:
    """dG/dr; on the diagonal r = s the s > r branch is returned."""
    r, s = _unit_interval(r, s)
    upper = d * r ** (d - 1.0) * (1.0 - s ** d)
    lower = -d * s ** d * r ** (d - 1.0)
    return _scalar_or_array(np.where(r <= s, upper, lower))


def density(p: ProfilePair, params: ProblemParams) -> np.ndarray:
    """n(r) = Q'(r) r^{1-d} / sigma_d; the centre value by quadratic extrapolation."""
    r = p.grid.nodes
    n = np.empty_like(r)
    n[1:] = p.qprime[1:] * r[1:] ** (1.0 - params.d) / params.sigma_d

    r1, r2, r3 = r[1:4]
    n1, n2, n3 = n[1:4]
    n[0] = (
        n1 * r2 * r3 / ((r1 - r2) * (r1 - r3))
        + n2 * r1 * r3 / ((r2 - r1) * (r2 - r3))
        + n3 * r1 * r2 / ((r3 - r1) * (r3 - r2))
    )
    return n


def potential(p: ProfilePair, params: ProblemParams) -> np.ndarray:
    """phi(r) = -(1/sigma_d) int_r^1 Q(s) s^{1-d} ds, so that phi(1) = 0."""
    r = p.grid.nodes
    integrand = np.zeros_like(r)
    integrand[1:] = p.q[1:] * r[1:] ** (1.0 - params.d)

    head = cumulative_trapezoid(integrand, r, initial=0.0)
    phi = -(head[-1] - head) / params.sigma_d
    phi[-1] = 0.0
    return phi


def total_mass(p: ProfilePair, params: ProblemParams) -> float:
    """Quadrature of sigma_d r^{d-1} n(r) = Q'(r) over the unit ball's radius."""
    r = p.grid.nodes
    n = density(p, params)
    integrand = params.sigma_d * r ** (params.d - 1.0) * n
    integrand[0] = 0.0
    return float(np.dot(p.grid.quadrature_weights, integrand))


class FixedPointOperator:
    """T and its derivative discretised on a fixed grid.

    Kernel matrices already carry the trapezoid weights and the 1/d factor, so
    one application is two matrix-vector products.
    """

    def __init__(self, params: ProblemParams, grid: RadialGrid):
        self.params = params
        self.grid = grid
        self._value_kernel, self._derivative_kernel = self._assemble()
        logger.debug(f"Assembled operator kernels for d={params.d}, N={grid.N}")

    def _assemble(self):
        d = self.params.d
        r = self.grid.nodes
        w = self.grid.quadrature_weights
        rr, ss = np.meshgrid(r, r, indexing='ij')

        value = green(rr, ss, d) * w[np.newaxis, :] / d
        derivative = green_dr(rr, ss, d) * w[np.newaxis, :] / d

        # dG/dr jumps at s = r: split the diagonal weight between both branches.
        h = np.diff(r)
        left = np.concatenate(([0.0], h)) / 2.0
        right = np.concatenate((h, [0.0])) / 2.0
        below = -d * r ** (2.0 * d - 1.0)
        above = d * r ** (d - 1.0) * (1.0 - r ** d)
        diagonal = np.arange(len(r))
        derivative[diagonal, diagonal] = (left * below + right * above) / d

        return value, derivative

    def source(self, p: ProfilePair) -> np.ndarray:
        """Integrand factor R(n(s)) s^{1-d} Q(s); zero at s = 0."""
        d = self.params.d
        r = self.grid.nodes
        with np.errstate(over='ignore', invalid='ignore'):
            rate = self.params.nonlinearity(density(p, self.params))
            f = np.zeros_like(r)
            f[1:] = rate[1:] * r[1:] ** (1.0 - d) * p.q[1:]
        _require_finite(f, "operator integrand")
        return f

    def apply(self, p: ProfilePair) -> ProfilePair:
        if not self.grid.same_as(p.grid):
            raise DomainError("profile grid differs from the operator grid")

        d = self.params.d
        m = self.params.m
        r = self.grid.nodes
        f = self.source(p)

        with np.errstate(over='ignore', invalid='ignore'):
            tq = m * r ** d + _ordered_quadrature(self._value_kernel, f)
            tqprime = m * d * r ** (d - 1.0) + _ordered_quadrature(self._derivative_kernel, f)
        # G(0, s) = G(1, s) = 0
        tq[0] = 0.0
        tq[-1] = m

        _require_finite(tq, "T Q")
        _require_finite(tqprime, "(T Q)'")
        return ProfilePair(grid=self.grid, q=tq, qprime=tqprime)

    __call__ = apply


def apply_operator(p: ProfilePair, params: ProblemParams) -> ProfilePair:
    """One-off application of T; iterate with FixedPointOperator instead."""
    return FixedPointOperator(params, p.grid).apply(p)


def _ordered_quadrature(kernel: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Row sums of kernel * f accumulated strictly left to right in s."""
    return np.add.accumulate(kernel * f[np.newaxis, :], axis=1)[:, -1]


def _require_finite(values: np.ndarray, label: str):
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        node = int(bad[0])
        raise EvaluationError(f"non-finite {label} at node {node}", node=node)
