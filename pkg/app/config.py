"""
Run configuration: flat `key = value` files with dotted keys.
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from dotenv import dotenv_values

from core.exceptions import ConfigError, DomainError
from core.model import (
    MIN_GRID_NODES,
    NONLINEARITY_KINDS,
    NonlinearitySpec,
    ProblemParams,
    RadialGrid,
    make_grid,
)

KNOWN_KEYS = {
    'dimension', 'mass', 'seed',
    'nonlinearity.kind', 'nonlinearity.scale', 'nonlinearity.table', 'nonlinearity.lipschitz',
    'grid.n', 'grid.gamma',
    'solver.tol', 'solver.max_iter',
    'certify.trials', 'verify.tolerance', 'oracle.tol',
    'output.profile_csv', 'output.report_json', 'output.sweep_csv',
}


@dataclass(frozen=True)
class RunConfig:
    """Typed, validated run configuration."""

    dimension: float = 3.0
    mass: Optional[float] = None
    nonlinearity_kind: str = 'identity'
    nonlinearity_scale: Optional[float] = None
    nonlinearity_table: Optional[Path] = None
    nonlinearity_lipschitz: float = 1.0
    grid_n: int = 2048
    grid_gamma: float = 2.0
    solver_tol: float = 1e-12
    solver_max_iter: int = 200
    output_profile_csv: Path = Path('profile.csv')
    output_report_json: Path = Path('report.json')
    output_sweep_csv: Path = Path('sweep.csv')
    seed: int = 0
    certify_trials: int = 100
    verify_tolerance: float = 1e-4
    oracle_tol: float = 1e-12

    def nonlinearity(self) -> NonlinearitySpec:
        if self.nonlinearity_kind == 'identity':
            return NonlinearitySpec.identity()
        if self.nonlinearity_kind == 'saturating':
            return NonlinearitySpec.saturating(self.nonlinearity_scale)
        samples = np.loadtxt(self.nonlinearity_table, delimiter=',', comments='#', ndmin=2)
        return NonlinearitySpec.tabulated(samples.tolist(), self.nonlinearity_lipschitz)

    def params(self, mass: Optional[float] = None) -> ProblemParams:
        """Problem parameters; without any mass a zero-mass placeholder is used."""
        m = self.mass if mass is None else mass
        if m is None:
            return ProblemParams(d=self.dimension, m=0.0, nonlinearity=self.nonlinearity(),
                                 allow_zero_mass=True)
        return ProblemParams(d=self.dimension, m=m, nonlinearity=self.nonlinearity())

    def grid(self) -> RadialGrid:
        return make_grid(self.grid_n, self.grid_gamma)


class _Reader:
    """Collects typed values and every validation problem."""

    def __init__(self, raw: Dict[str, Optional[str]]):
        self.raw = raw
        self.problems: List[str] = []

    def get(self, key: str, cast: Callable[[str], Any], default: Any = None,
            check: Optional[Callable[[Any], bool]] = None, requirement: str = '') -> Any:
        text = self.raw.get(key)
        if text is None or text.strip() == '':
            return default
        try:
            value = cast(text.strip())
        except ValueError:
            self.problems.append(f"{key}: cannot parse '{text}'")
            return default
        if check is not None and not check(value):
            self.problems.append(f"{key}: {requirement}, got {text.strip()}")
            return default
        return value


def _finite(x: float) -> bool:
    return math.isfinite(x)


def _integer(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(text)
    return int(value)


def parse_config(raw: Dict[str, Optional[str]]) -> RunConfig:
    """Validate raw key/value pairs into a RunConfig; raises ConfigError listing bad keys."""
    reader = _Reader(raw)
    problems = reader.problems
    for key in sorted(set(raw) - KNOWN_KEYS):
        problems.append(f"{key}: unknown key")

    kind = (raw.get('nonlinearity.kind') or 'identity').strip()
    if kind not in NONLINEARITY_KINDS:
        problems.append(f"nonlinearity.kind: must be one of {', '.join(NONLINEARITY_KINDS)}, got {kind}")

    values = dict(
        dimension=reader.get('dimension', float, 3.0, lambda x: _finite(x) and x > 2, "must be > 2"),
        mass=reader.get('mass', float, None, lambda x: _finite(x) and x > 0, "must be > 0"),
        nonlinearity_kind=kind,
        nonlinearity_scale=reader.get('nonlinearity.scale', float, None,
                                      lambda x: _finite(x) and x > 0, "must be > 0"),
        nonlinearity_table=reader.get('nonlinearity.table', Path),
        nonlinearity_lipschitz=reader.get('nonlinearity.lipschitz', float, 1.0,
                                          lambda x: _finite(x) and x > 0, "must be > 0"),
        grid_n=reader.get('grid.n', _integer, 2048, lambda x: x >= MIN_GRID_NODES,
                          f"must be an integer >= {MIN_GRID_NODES}"),
        grid_gamma=reader.get('grid.gamma', float, 2.0, lambda x: _finite(x) and x >= 1, "must be >= 1"),
        solver_tol=reader.get('solver.tol', float, 1e-12, lambda x: _finite(x) and x > 0, "must be > 0"),
        solver_max_iter=reader.get('solver.max_iter', _integer, 200, lambda x: x >= 1, "must be >= 1"),
        output_profile_csv=reader.get('output.profile_csv', Path, Path('profile.csv')),
        output_report_json=reader.get('output.report_json', Path, Path('report.json')),
        output_sweep_csv=reader.get('output.sweep_csv', Path, Path('sweep.csv')),
        seed=reader.get('seed', _integer, 0, lambda x: x >= 0, "must be >= 0"),
        certify_trials=reader.get('certify.trials', _integer, 100, lambda x: x >= 1, "must be >= 1"),
        verify_tolerance=reader.get('verify.tolerance', float, 1e-4,
                                    lambda x: _finite(x) and x >= 0, "must be >= 0"),
        oracle_tol=reader.get('oracle.tol', float, 1e-12, lambda x: _finite(x) and x > 0, "must be > 0"),
    )

    if kind == 'saturating' and values['nonlinearity_scale'] is None:
        problems.append("nonlinearity.scale: required for the saturating nonlinearity")
    if kind == 'tabulated':
        table = values['nonlinearity_table']
        if table is None:
            problems.append("nonlinearity.table: required for the tabulated nonlinearity")
        elif not table.is_file():
            problems.append(f"nonlinearity.table: file not found: {table}")
    if kind in ('identity', 'saturating') and values['nonlinearity_lipschitz'] != 1.0:
        problems.append(f"nonlinearity.lipschitz: {kind} nonlinearity has Lipschitz constant 1")

    if problems:
        raise ConfigError(problems)

    config = RunConfig(**values)
    try:
        config.nonlinearity()
    except (DomainError, ValueError, OSError) as e:
        raise ConfigError([f"nonlinearity: {e}"])
    return config


def load_config(path: Path) -> RunConfig:
    """Read and validate a configuration file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError([f"config: file not found: {path}"])
    raw = dotenv_values(path, interpolate=False, encoding='utf-8')
    return parse_config(dict(raw))
