"""
Contraction certification: constants A1-A4, the smallness condition on (rho, m),
the admissible radius interval, the maximal certified mass, and an empirical
check of the norm estimates on random profiles.
"""

import math
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from core.exceptions import DomainError
from core.model import ProblemParams, RadialGrid, pair_norm, weighted_norm
from services.operator import FixedPointOperator
from services.sampling import sample_ball_profile, trial_generators

logger = logging.getLogger(__name__)

# Discretisation slack allowed on empirical margins.
QUADRATURE_SLACK = 1e-8
MASS_BISECTION_RTOL = 1e-13
MASS_CROSS_CHECK_RTOL = 1e-10

ESTIMATE_NAMES = ('self_value', 'self_derivative', 'lipschitz_value', 'lipschitz_derivative')


@dataclass(frozen=True)
class ContractionCertificate:
    """Constants and radius that make T a contraction on the ball B(0, rho)."""

    a1: float
    a2: float
    a3: float
    a4: float
    m_max: float
    rho_lo: Optional[float] = None
    rho_hi: Optional[float] = None
    chosen_rho: Optional[float] = None
    q_bound: Optional[float] = None

    @property
    def certified(self) -> bool:
        return self.chosen_rho is not None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'A1': self.a1,
            'A2': self.a2,
            'A3': self.a3,
            'A4': self.a4,
            'rho_lo': self.rho_lo,
            'rho_hi': self.rho_hi,
            'chosen_rho': self.chosen_rho,
            'q_bound': self.q_bound,
            'm_max': self.m_max,
            'certified': self.certified,
        }


@dataclass
class EstimateViolation:
    trial: int
    estimate: str
    margin: float

    def to_dict(self) -> Dict[str, Any]:
        return {'trial': self.trial, 'estimate': self.estimate, 'margin': self.margin}


@dataclass
class EstimateReport:
    """Smallest slack of each norm estimate and the largest observed contraction ratio."""

    trials: int
    rho: float
    margins: Dict[str, float]
    max_ratio: float
    ratio_bound: float
    violations: List[EstimateViolation] = field(default_factory=list)

    @property
    def min_margin(self) -> float:
        return min(self.margins.values())

    @property
    def passed(self) -> bool:
        return not self.violations and self.max_ratio <= self.ratio_bound + QUADRATURE_SLACK

    def to_dict(self) -> Dict[str, Any]:
        return {
            'trials': self.trials,
            'rho': self.rho,
            'margins': dict(self.margins),
            'min_margin': self.min_margin,
            'max_ratio': self.max_ratio,
            'ratio_bound': self.ratio_bound,
            'violations': [v.to_dict() for v in self.violations],
            'passed': self.passed,
        }


def constants(params: ProblemParams) -> Tuple[float, float, float, float]:
    """A1..A4 from 2 A_i sigma_d (d-2) = L, L(d+4), L+1, L(d+4)+1."""
    d = params.d
    L = params.L
    denominator = 2.0 * params.sigma_d * (d - 2.0)
    return (
        L / denominator,
        L * (d + 4.0) / denominator,
        (L + 1.0) / denominator,
        (L * (d + 4.0) + 1.0) / denominator,
    )


def admissible_interval(params: ProblemParams) -> Optional[Tuple[float, float]]:
    """Radii rho with a2 rho^2 - rho + m d <= 0 and a4 rho < 1, as [rho_lo, rho_hi)."""
    if params.m <= 0:
        return None

    _, a2, _, a4 = constants(params)
    md = params.m * params.d
    discriminant = 1.0 - 4.0 * a2 * md
    if discriminant < 0:
        return None

    root = math.sqrt(discriminant)
    # Stable form of (1 - root) / (2 a2) for small m.
    rho_lo = 2.0 * md / (1.0 + root)
    rho_hi = min((1.0 + root) / (2.0 * a2), 1.0 / a4)
    if rho_lo < rho_hi:
        return rho_lo, rho_hi
    return None


def _certifiable(params: ProblemParams, m: float) -> bool:
    return admissible_interval(params.with_mass(m)) is not None


def max_mass_closed_form(params: ProblemParams) -> float:
    """Closed-form supremum of the certified masses."""
    _, a2, _, a4 = constants(params)
    d = params.d
    if params.L * (d + 4.0) > 1.0:
        # discriminant reaches zero first
        return 1.0 / (4.0 * a2 * d)
    # the cap 1/a4 binds: lower root reaches it
    return (1.0 / a4 - a2 / a4 ** 2) / d


def max_mass_bisection(params: ProblemParams) -> float:
    """Largest certifiable mass found by bisecting admissible_interval itself."""
    _, a2, _, _ = constants(params)
    low, high = 0.0, 1.0 / (4.0 * a2 * params.d)
    if _certifiable(params, high):
        return high
    while high - low > MASS_BISECTION_RTOL * high:
        middle = 0.5 * (low + high)
        if _certifiable(params, middle):
            low = middle
        else:
            high = middle
    return low


def max_mass(params: ProblemParams) -> float:
    """Supremum of the masses for which the admissible interval is nonempty."""
    closed = max_mass_closed_form(params)
    bisected = max_mass_bisection(params)
    if abs(closed - bisected) > MASS_CROSS_CHECK_RTOL * closed:
        logger.warning(f"Maximal mass closed form {closed!r} disagrees with bisection {bisected!r}")
    return closed


def choose_rho(rho_lo: float, rho_hi: float) -> float:
    """Geometric mean of the interval endpoints, kept below the open upper end."""
    rho = math.sqrt(rho_lo * rho_hi)
    return min(max(rho, rho_lo), math.nextafter(rho_hi, 0.0))


def certify(params: ProblemParams, rho: Optional[float] = None) -> ContractionCertificate:
    """Assemble the contraction certificate for the given parameters."""
    a1, a2, a3, a4 = constants(params)
    m_max = max_mass(params)
    interval = admissible_interval(params)

    if interval is None:
        if params.m > 0:
            logger.warning(f"Mass {params.m} is not certified (m_max = {m_max:.6g})")
        return ContractionCertificate(a1=a1, a2=a2, a3=a3, a4=a4, m_max=m_max)

    rho_lo, rho_hi = interval
    if rho is None:
        rho = choose_rho(rho_lo, rho_hi)
    elif not rho_lo <= rho < rho_hi:
        raise DomainError(f"rho = {rho} lies outside the admissible interval [{rho_lo}, {rho_hi})")

    q_bound = a4 * rho
    logger.info(f"Certified m={params.m} with rho={rho:.6g} in [{rho_lo:.6g}, {rho_hi:.6g}), q={q_bound:.6g}")
    return ContractionCertificate(
        a1=a1, a2=a2, a3=a3, a4=a4, m_max=m_max,
        rho_lo=rho_lo, rho_hi=rho_hi, chosen_rho=rho, q_bound=q_bound,
    )


def empirical_estimates(
    params: ProblemParams,
    grid: RadialGrid,
    rho: float,
    trials: int,
    seed: int,
    operator: Optional[FixedPointOperator] = None,
) -> EstimateReport:
    """Check the self-map and Lipschitz estimates on seeded random pairs in the ball."""
    if trials < 1:
        raise DomainError(f"need at least one trial, got {trials}")

    d = params.d
    m = params.m
    a1, a2, a3, a4 = constants(params)
    operator = operator or FixedPointOperator(params, grid)

    margins = {name: math.inf for name in ESTIMATE_NAMES}
    violations: List[EstimateViolation] = []
    max_ratio = 0.0

    for trial, rng in enumerate(trial_generators(seed, trials)):
        q = sample_ball_profile(rng, grid, d, rho)
        s = sample_ball_profile(rng, grid, d, rho)
        tq = operator.apply(q)
        ts = operator.apply(s)

        product = weighted_norm(q, 2.0 - d, 'value') * weighted_norm(q, 3.0 - d, 'derivative')
        diff, tdiff = q - s, tq - ts
        cross = max(
            weighted_norm(diff, 2.0 - d, 'value') * weighted_norm(q, 3.0 - d, 'derivative'),
            weighted_norm(diff, 3.0 - d, 'derivative') * weighted_norm(s, 2.0 - d, 'value'),
        )

        observed = {
            'self_value': a1 * product + m - weighted_norm(tq, 2.0 - d, 'value'),
            'self_derivative': a2 * product + m * d - weighted_norm(tq, 3.0 - d, 'derivative'),
            'lipschitz_value': a3 * cross - weighted_norm(tdiff, 2.0 - d, 'value'),
            'lipschitz_derivative': a4 * cross - weighted_norm(tdiff, 3.0 - d, 'derivative'),
        }
        for name, margin in observed.items():
            margins[name] = min(margins[name], margin)
            if margin < -QUADRATURE_SLACK:
                violations.append(EstimateViolation(trial=trial, estimate=name, margin=margin))
                logger.warning(f"Estimate {name} violated in trial {trial} by {-margin:.3e}")

        spread = pair_norm(diff, d)
        if spread > 0:
            max_ratio = max(max_ratio, pair_norm(tdiff, d) / spread)

    report = EstimateReport(
        trials=trials,
        rho=rho,
        margins=margins,
        max_ratio=max_ratio,
        ratio_bound=a4 * rho,
        violations=violations,
    )
    logger.info(f"Empirical estimates over {trials} trials: min margin {report.min_margin:.3e}, "
                f"max ratio {max_ratio:.4f} (bound {a4 * rho:.4f})")
    return report
