"""
Picard iteration of T, ODE residual of the radial boundary value problem and
the cone checks for Q(r) r^{2-d}.
"""

import math
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from core.exceptions import DivergenceError, DomainError, NonConvergenceError
from core.model import ProblemParams, ProfilePair, RadialGrid, pair_norm
from services.certify import ContractionCertificate
from services.operator import FixedPointOperator, density
from services.sampling import sample_cone_profile, trial_generators

logger = logging.getLogger(__name__)

DIVERGENCE_FACTOR = 10.0
CONE_RELATIVE_SLACK = 1e-10


class ConeCheck(NamedTuple):
    passed: bool
    min_slope: float


@dataclass
class SolveReport:
    """Outcome of a Picard run."""

    profile: ProfilePair
    iterations: int
    final_update: float
    empirical_rate: float
    residual_sup: float
    cone_min_slope: float
    cone_passed: bool
    certificate: Optional[ContractionCertificate] = None
    converged: bool = True
    error_bound: Optional[float] = None
    updates: List[float] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.certificate is not None and self.certificate.certified

    def to_dict(self) -> Dict[str, Any]:
        return {
            'converged': self.converged,
            'certified': self.certified,
            'iterations': self.iterations,
            'final_update': self.final_update,
            'empirical_rate': self.empirical_rate,
            'error_bound': self.error_bound,
            'residual_sup': self.residual_sup,
            'cone_passed': self.cone_passed,
            'cone_min_slope': self.cone_min_slope,
            'updates': list(self.updates),
        }


def default_initial(params: ProblemParams, grid: RadialGrid) -> ProfilePair:
    """Q0(r) = m r^d, the uniform-density profile."""
    d, m = params.d, params.m
    return ProfilePair.from_function(
        grid,
        lambda r: m * r ** d,
        lambda r: m * d * r ** (d - 1.0),
    )


def a_posteriori_bound(q: float, update: float) -> float:
    """Banach estimate of the distance to the fixed point: q |x_k - x_{k-1}| / (1 - q)."""
    if not 0 <= q < 1:
        raise DomainError(f"contraction factor must lie in [0, 1), got {q}")
    return q * update / (1.0 - q)


def empirical_rate(updates: List[float]) -> float:
    """Geometric mean of successive update ratios."""
    positive = [u for u in updates if u > 0]
    if len(positive) < 2:
        return 0.0
    ratios = np.array(positive[1:]) / np.array(positive[:-1])
    return float(np.exp(np.mean(np.log(ratios))))


def convergence_order(coarse_error: float, fine_error: float) -> float:
    """Observed order under mesh doubling."""
    return math.log2(coarse_error / fine_error)


def residual(p: ProfilePair, params: ProblemParams) -> float:
    """Scaled sup of |-Q'' + (d-1) Q'/r - R(n) Q| over nodes 2..N-2.

    Q'' comes from differencing the tracked Q' once.
    """
    r = p.grid.nodes
    d = params.d
    qsecond = np.gradient(p.qprime, r, edge_order=2)
    rate = params.nonlinearity(density(p, params))

    inner = slice(2, p.grid.N - 1)
    defect = -qsecond[inner] + (d - 1.0) * p.qprime[inner] / r[inner] - rate[inner] * p.q[inner]
    scale = max(1.0, float(np.max(np.abs(p.q))))
    return float(np.max(np.abs(defect)) / scale)


def _cone_coordinate(p: ProfilePair, d: float) -> Tuple[np.ndarray, np.ndarray]:
    r = p.grid.nodes[1:]
    return r, p.q[1:] * r ** (2.0 - d)


def cone_check(p: ProfilePair, d: float) -> ConeCheck:
    """Minimal discrete slope of g = Q r^{2-d} over the interior nodes."""
    r, g = _cone_coordinate(p, d)
    slopes = np.diff(g) / np.diff(r)
    min_slope = float(slopes.min())
    slack = CONE_RELATIVE_SLACK * float(np.max(np.abs(g)))
    return ConeCheck(passed=min_slope >= -slack, min_slope=min_slope)


def cone_invariance_trials(
    params: ProblemParams,
    grid: RadialGrid,
    trials: int,
    seed: int,
    operator: Optional[FixedPointOperator] = None,
) -> ConeCheck:
    """Apply T to seeded cone profiles; passes if every image stays in the cone.

    min_slope is the smallest slope divided by max|g| of its image.
    """
    operator = operator or FixedPointOperator(params, grid)
    passed = True
    min_slope = math.inf
    for trial, rng in enumerate(trial_generators(seed, trials)):
        image = operator.apply(sample_cone_profile(rng, grid, params.d, params.m))
        check = cone_check(image, params.d)
        scale = float(np.max(np.abs(_cone_coordinate(image, params.d)[1])))
        normalised = check.min_slope / scale if scale > 0 else check.min_slope
        if not check.passed:
            logger.warning(f"Cone profile {trial} left the cone (relative slope {normalised:.3e})")
        passed = passed and check.passed
        min_slope = min(min_slope, normalised)
    return ConeCheck(passed=passed, min_slope=min_slope)


def picard_solve(
    params: ProblemParams,
    grid: RadialGrid,
    tol: float = 1e-12,
    max_iter: int = 200,
    initial: Optional[ProfilePair] = None,
    certificate: Optional[ContractionCertificate] = None,
    operator: Optional[FixedPointOperator] = None,
) -> SolveReport:
    """Iterate p <- T p until the pair-norm update drops below tol."""
    if not tol > 0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    if max_iter < 1:
        raise DomainError(f"max_iter must be at least 1, got {max_iter}")

    d = params.d
    operator = operator or FixedPointOperator(params, grid)
    p = initial if initial is not None else default_initial(params, grid)
    certified = certificate is not None and certificate.certified

    start_norm = pair_norm(p, d)
    if certified:
        if start_norm > certificate.chosen_rho:
            logger.warning(f"Initial iterate norm {start_norm:.6g} lies outside the certified ball "
                           f"rho = {certificate.chosen_rho:.6g}")
        guard = DIVERGENCE_FACTOR * certificate.chosen_rho
    else:
        logger.warning(f"Running uncertified Picard iteration at m = {params.m}")
        guard = DIVERGENCE_FACTOR * max(start_norm, params.m * d)

    updates: List[float] = []
    converged = False
    for iteration in range(1, max_iter + 1):
        following = operator.apply(p)
        update = pair_norm(following - p, d)
        updates.append(update)
        p = following
        logger.debug(f"Picard iteration {iteration}: update {update:.3e}")

        size = pair_norm(p, d)
        if size > guard:
            report = _report(params, p, updates, certificate, converged=False)
            raise DivergenceError(
                f"iterate norm {size:.6g} exceeded the guard {guard:.6g} at iteration {iteration}",
                report=report,
            )
        if update <= tol:
            converged = True
            break

    report = _report(params, p, updates, certificate, converged=converged)
    if not converged:
        raise NonConvergenceError(
            f"no convergence within {max_iter} iterations (last update {updates[-1]:.3e})",
            report=report,
        )

    logger.info(f"Picard converged in {report.iterations} iterations, rate {report.empirical_rate:.4f}, "
                f"residual {report.residual_sup:.3e}")
    return report


def _report(
    params: ProblemParams,
    p: ProfilePair,
    updates: List[float],
    certificate: Optional[ContractionCertificate],
    converged: bool,
) -> SolveReport:
    cone = cone_check(p, params.d)
    bound = None
    if certificate is not None and certificate.certified and certificate.q_bound < 1:
        bound = a_posteriori_bound(certificate.q_bound, updates[-1])

    return SolveReport(
        profile=p,
        iterations=len(updates),
        final_update=updates[-1],
        empirical_rate=empirical_rate(updates),
        residual_sup=residual(p, params),
        cone_min_slope=cone.min_slope,
        cone_passed=cone.passed,
        certificate=certificate,
        converged=converged,
        error_bound=bound,
        updates=updates,
    )
