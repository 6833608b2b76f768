"""
Shooting oracle for the radial boundary value problem

    -Q'' + (d-1) Q'/r = R(Q' r^{1-d} / sigma_d) Q,   Q(0) = 0,  Q(1) = m,

solved by integrating outward from a series seed and matching Q(1) = m through
the central density. Shares no code with the operator quadrature.
"""

import math
import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Tuple

import numpy as np

from core.exceptions import DomainError, ShootingBracketError, StepSizeError
from core.model import ProblemParams, ProfilePair, RadialGrid, pair_norm

logger = logging.getLogger(__name__)

START_RADIUS = 1e-6
# substeps keep each RK4 step below this fraction of the local radius
SUBSTEP_FRACTION = 0.005
MAX_DOUBLINGS = 60
MAX_SHOTS = 200
BISECTION_RTOL = 1e-4


@dataclass
class ShootResult:
    profile: ProfilePair
    central_density: float
    shots: int
    bracket: Tuple[float, float]

    def to_dict(self):
        return {
            'central_density': self.central_density,
            'shots': self.shots,
            'bracket': list(self.bracket),
        }


class ProfileDiscrepancy(NamedTuple):
    sup_q_diff: float
    sup_qprime_diff: float
    weighted_pair_diff: float


class RadialShooter:
    """Integrates the radial ODE outward on the grid for a given central density."""

    def __init__(self, params: ProblemParams, grid: RadialGrid, start_radius: float = START_RADIUS):
        if not 0 < start_radius < 1:
            raise DomainError(f"start radius must lie in (0, 1), got {start_radius}")
        self.params = params
        self.grid = grid
        self.start_radius = start_radius
        self._sigma = params.sigma_d

    def _rhs(self, r: float, q: float, qprime: float) -> Tuple[float, float]:
        d = self.params.d
        n = qprime * r ** (1.0 - d) / self._sigma
        rate = self.params.nonlinearity(n)
        return qprime, (d - 1.0) * qprime / r - rate * q

    def _rk4(self, r: float, q: float, qprime: float, h: float) -> Tuple[float, float]:
        k1q, k1p = self._rhs(r, q, qprime)
        k2q, k2p = self._rhs(r + h / 2, q + h / 2 * k1q, qprime + h / 2 * k1p)
        k3q, k3p = self._rhs(r + h / 2, q + h / 2 * k2q, qprime + h / 2 * k2p)
        k4q, k4p = self._rhs(r + h, q + h * k3q, qprime + h * k3p)
        return (
            q + h / 6 * (k1q + 2 * k2q + 2 * k3q + k4q),
            qprime + h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p),
        )

    def _advance(self, r: float, target: float, q: float, qprime: float) -> Tuple[float, float]:
        span = target - r
        substeps = max(1, math.ceil(span / (SUBSTEP_FRACTION * r)))
        h = span / substeps
        if not h > 0 or r + h == r:
            raise StepSizeError(f"step size underflow at r = {r!r}")
        for k in range(substeps):
            q, qprime = self._rk4(r + k * h, q, qprime, h)
            if not (math.isfinite(q) and math.isfinite(qprime)):
                break
        return q, qprime

    def integrate(self, a: float) -> Tuple[np.ndarray, np.ndarray]:
        """Samples of (Q, Q') on the grid for central density a."""
        d = self.params.d
        r = self.grid.nodes
        q = np.empty_like(r)
        qprime = np.empty_like(r)

        # series seed for constant density a near the centre
        seeded = r <= self.start_radius
        q[seeded] = a * self._sigma * r[seeded] ** d / d
        qprime[seeded] = a * self._sigma * r[seeded] ** (d - 1.0)

        position = self.start_radius
        state = (a * self._sigma * position ** d / d, a * self._sigma * position ** (d - 1.0))
        for i in np.flatnonzero(~seeded):
            state = self._advance(position, r[i], *state)
            position = r[i]
            q[i], qprime[i] = state
            if not (math.isfinite(state[0]) and math.isfinite(state[1])):
                q[i:] = math.inf
                qprime[i:] = math.inf
                break
        return q, qprime

    def outer_mass(self, a: float) -> float:
        return float(self.integrate(a)[0][-1])


def shoot_solve(
    params: ProblemParams,
    grid: RadialGrid,
    tol: float = 1e-12,
    start_radius: float = START_RADIUS,
) -> ShootResult:
    """Find the central density whose outward solution carries mass m at r = 1."""
    if not params.m > 0:
        raise DomainError(f"shooting needs m > 0, got {params.m}")
    if not tol > 0:
        raise DomainError(f"tolerance must be positive, got {tol}")

    m = params.m
    target_tol = tol * max(1.0, m)
    shooter = RadialShooter(params, grid, start_radius)
    trace: List[Tuple[float, float]] = [(0.0, 0.0)]

    # bracket: Q(1) is increasing in a; double until overshoot
    low, f_low = 0.0, 0.0
    high = m * params.d / params.sigma_d
    f_high = shooter.outer_mass(high)
    trace.append((high, f_high))
    doublings = 0
    while f_high <= m:
        if not f_high > f_low:
            raise ShootingBracketError(
                f"outer mass not increasing in the central density near a = {high:.6g}", trace=trace
            )
        low, f_low = high, f_high
        high *= 2.0
        f_high = shooter.outer_mass(high)
        trace.append((high, f_high))
        doublings += 1
        if doublings > MAX_DOUBLINGS:
            raise ShootingBracketError("no overshoot found while bracketing", trace=trace)

    # bisection until the bracket is tight, then safeguarded secant
    a, f_a = high, f_high
    shots = len(trace) - 1
    while abs(f_a - m) > target_tol:
        if shots >= MAX_SHOTS:
            raise ShootingBracketError(f"no match within {MAX_SHOTS} shots", trace=trace)

        tight = high - low <= BISECTION_RTOL * high and math.isfinite(f_high)
        a = 0.5 * (low + high)
        if tight and f_high != f_low:
            secant = low + (m - f_low) * (high - low) / (f_high - f_low)
            if low < secant < high:
                a = secant

        f_a = shooter.outer_mass(a)
        trace.append((a, f_a))
        shots += 1
        logger.debug(f"Shot {shots}: a = {a!r}, Q(1) = {f_a!r}")

        if f_a < f_low or f_a > f_high:
            raise ShootingBracketError(f"outer mass not monotone at a = {a:.6g}", trace=trace)
        if f_a <= m:
            low, f_low = a, f_a
        else:
            high, f_high = a, f_a
        if abs(f_a - m) > target_tol and high - low <= 4.0 * np.finfo(float).eps * high:
            raise ShootingBracketError(
                f"bracket on the central density collapsed at a = {a!r} with "
                f"|Q(1) - m| = {abs(f_a - m):.3e} above the tolerance {target_tol:.3e}",
                trace=trace,
            )

    q, qprime = shooter.integrate(a)
    q[0] = 0.0
    profile = ProfilePair(grid=grid, q=q, qprime=qprime)
    logger.info(f"Shooting matched Q(1) = {q[-1]!r} with central density {a!r} after {shots} shots")
    return ShootResult(profile=profile, central_density=a, shots=shots, bracket=(low, high))


def compare_profiles(a: ProfilePair, b: ProfilePair, d: float) -> ProfileDiscrepancy:
    """Node-wise sup differences of Q and Q' and the pair norm of a - b."""
    diff = a - b
    return ProfileDiscrepancy(
        sup_q_diff=float(np.max(np.abs(diff.q))),
        sup_qprime_diff=float(np.max(np.abs(diff.qprime))),
        weighted_pair_diff=pair_norm(diff, d),
    )
