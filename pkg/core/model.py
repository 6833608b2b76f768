"""
Problem parameters, radial grids, profile pairs and the weighted sup norms of C^1_d.
"""

import math
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Literal, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gamma as gamma_function

from core.exceptions import DomainError, EvaluationError, GridMismatchError

logger = logging.getLogger(__name__)

# Temperature is fixed; carried for documentation only.
THETA = 1.0

MIN_GRID_NODES = 16
DEFAULT_GRADING = 2.0
WEIGHT_SUM_TOLERANCE = 1e-14

NONLINEARITY_KINDS = ('identity', 'saturating', 'tabulated')

Component = Literal['value', 'derivative']


def sphere_measure(d: float) -> float:
    """Surface measure of the unit sphere in R^d, 2 pi^(d/2) / Gamma(d/2)."""
    if not d > 2:
        raise DomainError(f"dimension must satisfy d > 2, got {d}")
    return float(2.0 * math.pi ** (d / 2.0) / gamma_function(d / 2.0))


@dataclass(frozen=True)
class NonlinearitySpec:
    """The nonlinearity R with its declared global Lipschitz constant L.

    R is odd-extended for negative arguments, R(z) = -R(-z).
    """

    kind: str
    lipschitz_L: float
    scale: Optional[float] = None
    table: Optional[Tuple[Tuple[float, float], ...]] = None

    def __post_init__(self):
        if self.kind not in NONLINEARITY_KINDS:
            raise DomainError(f"unknown nonlinearity kind '{self.kind}'")
        if not (self.lipschitz_L > 0 and math.isfinite(self.lipschitz_L)):
            raise DomainError(f"Lipschitz constant must be positive, got {self.lipschitz_L}")

        if self.kind in ('identity', 'saturating') and self.lipschitz_L != 1.0:
            raise DomainError(f"{self.kind} nonlinearity has Lipschitz constant 1, got {self.lipschitz_L}")

        if self.kind == 'saturating':
            if self.scale is None or not self.scale > 0:
                raise DomainError(f"saturating nonlinearity needs scale > 0, got {self.scale}")

        if self.kind == 'tabulated':
            self._validate_table()

        if self(0.0) != 0.0:
            raise DomainError("nonlinearity must satisfy R(0) = 0")

    def _validate_table(self):
        if not self.table or len(self.table) < 2:
            raise DomainError("tabulated nonlinearity needs at least two samples")
        z, values = self._columns()
        if z[0] != 0.0 or values[0] != 0.0:
            raise DomainError("tabulated nonlinearity must start at the sample (0, 0)")
        if not np.all(np.isfinite(z)) or not np.all(np.isfinite(values)):
            raise DomainError("tabulated nonlinearity has non-finite samples")
        if np.any(np.diff(z) <= 0):
            raise DomainError("tabulated abscissae must be strictly increasing")

        slope = float(np.max(np.abs(np.diff(values) / np.diff(z))))
        if slope > self.lipschitz_L:
            raise DomainError(
                f"declared Lipschitz constant {self.lipschitz_L} is below the "
                f"largest table slope {slope}"
            )

    def _columns(self) -> Tuple[np.ndarray, np.ndarray]:
        samples = np.asarray(self.table, dtype=float)
        return samples[:, 0], samples[:, 1]

    @classmethod
    def identity(cls) -> 'NonlinearitySpec':
        return cls(kind='identity', lipschitz_L=1.0)

    @classmethod
    def saturating(cls, scale: float) -> 'NonlinearitySpec':
        """R(z) = z / (1 + z/scale)."""
        return cls(kind='saturating', lipschitz_L=1.0, scale=float(scale))

    @classmethod
    def tabulated(cls, samples: Sequence[Tuple[float, float]], lipschitz_L: float) -> 'NonlinearitySpec':
        """Piecewise linear R through the given (z, R(z)) samples."""
        table = tuple((float(z), float(v)) for z, v in samples)
        return cls(kind='tabulated', lipschitz_L=float(lipschitz_L), table=table)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == 'identity':
            return z.copy() if z.ndim else float(z)

        magnitude = np.abs(z)
        if self.kind == 'saturating':
            value = magnitude / (1.0 + magnitude / self.scale)
        else:
            value = self._interpolate(magnitude)

        result = np.sign(z) * value
        return result if result.ndim else float(result)

    def _interpolate(self, magnitude: np.ndarray) -> np.ndarray:
        z, values = self._columns()
        inside = np.interp(magnitude, z, values)
        last_slope = (values[-1] - values[-2]) / (z[-1] - z[-2])
        beyond = values[-1] + last_slope * (magnitude - z[-1])
        return np.where(magnitude > z[-1], beyond, inside)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': self.kind,
            'lipschitz_L': self.lipschitz_L,
            'scale': self.scale,
            'table': [list(row) for row in self.table] if self.table else None,
        }


@dataclass(frozen=True)
class ProblemParams:
    """Dimension, mass and nonlinearity of the radial problem."""

    d: float
    m: float
    nonlinearity: NonlinearitySpec = field(default_factory=NonlinearitySpec.identity)
    # m = 0 is a degenerate case accepted by tests only.
    allow_zero_mass: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.d) and self.d > 2):
            raise DomainError(f"dimension must satisfy d > 2, got {self.d}")
        if not math.isfinite(self.m) or self.m < 0 or (self.m == 0 and not self.allow_zero_mass):
            raise DomainError(f"mass must be positive, got {self.m}")

    @property
    def sigma_d(self) -> float:
        return sphere_measure(self.d)

    @property
    def theta(self) -> float:
        return THETA

    @property
    def L(self) -> float:
        return self.nonlinearity.lipschitz_L

    def with_mass(self, m: float) -> 'ProblemParams':
        return ProblemParams(d=self.d, m=m, nonlinearity=self.nonlinearity,
                             allow_zero_mass=self.allow_zero_mass)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'd': self.d,
            'm': self.m,
            'sigma_d': self.sigma_d,
            'theta': self.theta,
            'nonlinearity': self.nonlinearity.to_dict(),
        }


def _frozen_copy(owner: Any, name: str) -> np.ndarray:
    """Replace a frozen dataclass field by a read-only float copy; callers keep their buffers."""
    array = np.array(getattr(owner, name), dtype=float)
    array.setflags(write=False)
    object.__setattr__(owner, name, array)
    return array


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Graded mesh r_i = (i/N)^gamma on [0, 1] with trapezoid weights."""

    nodes: np.ndarray
    grading_exponent: float
    quadrature_weights: np.ndarray

    def __post_init__(self):
        nodes = _frozen_copy(self, 'nodes')
        weights = _frozen_copy(self, 'quadrature_weights')
        if nodes.ndim != 1 or len(nodes) < MIN_GRID_NODES + 1:
            raise DomainError(f"grid needs at least {MIN_GRID_NODES} intervals")
        if nodes[0] != 0.0 or nodes[-1] != 1.0:
            raise DomainError("grid must start at exactly 0 and end at exactly 1")
        if np.any(np.diff(nodes) <= 0):
            raise DomainError("grid nodes must be strictly increasing")
        if np.any(weights < 0):
            raise DomainError("quadrature weights must be nonnegative")
        total = math.fsum(weights)
        if abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise DomainError(f"quadrature weights sum to {total!r}, expected 1")

    @property
    def N(self) -> int:
        return len(self.nodes) - 1

    def same_as(self, other: 'RadialGrid') -> bool:
        return self is other or (
            len(self.nodes) == len(other.nodes) and np.array_equal(self.nodes, other.nodes)
        )


def make_grid(N: int, gamma: float = DEFAULT_GRADING) -> RadialGrid:
    """Build the graded grid with N intervals and composite trapezoid weights."""
    if int(N) != N or N < MIN_GRID_NODES:
        raise DomainError(f"grid needs N >= {MIN_GRID_NODES} intervals, got {N}")
    if not (math.isfinite(gamma) and gamma >= 1):
        raise DomainError(f"grading exponent must satisfy gamma >= 1, got {gamma}")

    N = int(N)
    nodes = (np.arange(N + 1, dtype=float) / N) ** gamma
    nodes[0] = 0.0
    nodes[-1] = 1.0

    # w_i = (r_{i+1} - r_{i-1}) / 2 telescopes to exactly one.
    weights = np.empty(N + 1)
    weights[0] = nodes[1] / 2.0
    weights[1:-1] = (nodes[2:] - nodes[:-2]) / 2.0
    weights[-1] = (1.0 - nodes[-2]) / 2.0

    return RadialGrid(nodes=nodes, grading_exponent=float(gamma), quadrature_weights=weights)


@dataclass(frozen=True, eq=False)
class ProfilePair:
    """Samples of (Q, Q') on a grid; one element of C^1_d."""

    grid: RadialGrid
    q: np.ndarray
    qprime: np.ndarray

    def __post_init__(self):
        _frozen_copy(self, 'q')
        _frozen_copy(self, 'qprime')
        size = self.grid.N + 1
        if self.q.shape != (size,) or self.qprime.shape != (size,):
            raise DomainError(f"profile samples must have length {size}")
        if self.q[0] != 0.0:
            raise DomainError(f"profile must satisfy Q(0) = 0, got {self.q[0]!r}")

    @classmethod
    def from_arrays(cls, grid: RadialGrid, q, qprime) -> 'ProfilePair':
        return cls(grid=grid, q=q, qprime=qprime)

    @classmethod
    def from_function(
        cls,
        grid: RadialGrid,
        f: Callable[[np.ndarray], np.ndarray],
        fprime: Callable[[np.ndarray], np.ndarray],
    ) -> 'ProfilePair':
        """Sample a closed-form profile; Q(0) is pinned to zero."""
        r = grid.nodes
        q = np.array(np.broadcast_to(f(r), r.shape), dtype=float)
        qprime = np.array(np.broadcast_to(fprime(r), r.shape), dtype=float)
        q[0] = 0.0
        return cls(grid=grid, q=q, qprime=qprime)

    @classmethod
    def zeros(cls, grid: RadialGrid) -> 'ProfilePair':
        return cls(grid=grid, q=np.zeros(grid.N + 1), qprime=np.zeros(grid.N + 1))

    def _check_grid(self, other: 'ProfilePair'):
        if not self.grid.same_as(other.grid):
            raise GridMismatchError("profiles live on different grids")

    def __add__(self, other: 'ProfilePair') -> 'ProfilePair':
        self._check_grid(other)
        return ProfilePair(self.grid, self.q + other.q, self.qprime + other.qprime)

    def __sub__(self, other: 'ProfilePair') -> 'ProfilePair':
        self._check_grid(other)
        return ProfilePair(self.grid, self.q - other.q, self.qprime - other.qprime)

    def scaled(self, c: float) -> 'ProfilePair':
        return ProfilePair(self.grid, c * self.q, c * self.qprime)


def weighted_norm(p: ProfilePair, alpha: float, which: Component = 'value') -> float:
    """Weighted sup norm |Q|_alpha over the interior nodes r_1..r_N."""
    if alpha > 0:
        raise DomainError(f"weighted norm needs alpha <= 0, got {alpha}")
    if which == 'value':
        samples = p.q
    elif which == 'derivative':
        samples = p.qprime
    else:
        raise DomainError(f"unknown profile component '{which}'")

    r = p.grid.nodes[1:]
    weighted = np.abs(samples[1:] * r ** alpha)
    bad = np.flatnonzero(~np.isfinite(weighted))
    if bad.size:
        node = int(bad[0]) + 1
        raise EvaluationError(f"non-finite {which} sample at node {node}", node=node)
    return float(weighted.max())


def pair_norm(p: ProfilePair, d: float) -> float:
    """||Q|| = max(|Q|_{2-d}, |Q'|_{3-d})."""
    return max(
        weighted_norm(p, 2.0 - d, 'value'),
        weighted_norm(p, 3.0 - d, 'derivative'),
    )
