"""
Exception hierarchy for radfix.
"""

from typing import Any, Dict, List, Optional


class RadfixError(Exception):
    """Base class for all radfix errors."""

    def to_dict(self) -> Dict[str, Any]:
        """Machine-readable error object for the report file."""
        return {
            'type': type(self).__name__,
            'message': str(self),
        }


class DomainError(RadfixError, ValueError):
    """Raised when a parameter or argument lies outside the admissible domain."""
    pass


class EvaluationError(RadfixError, ArithmeticError):
    """Raised when a computation produces non-finite values."""

    def __init__(self, message: str, node: Optional[int] = None):
        super().__init__(message)
        self.node = node

    def to_dict(self) -> Dict[str, Any]:
        payload = super().to_dict()
        payload['node'] = self.node
        return payload


class GridMismatchError(RadfixError, ValueError):
    """Raised when two profiles live on different grids."""
    pass


class ConvergenceError(RadfixError):
    """Base class for fixed-point iteration failures."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report

    def to_dict(self) -> Dict[str, Any]:
        payload = super().to_dict()
        if self.report is not None:
            payload['iterations'] = self.report.iterations
            payload['final_update'] = self.report.final_update
        return payload


class NonConvergenceError(ConvergenceError):
    """Raised when Picard iteration exhausts max_iter; carries the best iterate."""
    pass


class DivergenceError(ConvergenceError):
    """Raised when iterates leave the guard ball."""
    pass


class ShootingError(RadfixError):
    """Base class for shooting oracle failures."""
    pass


class ShootingBracketError(ShootingError):
    """Raised when no monotone bracket on the central density can be found."""

    def __init__(self, message: str, trace: Optional[List[Any]] = None):
        super().__init__(message)
        self.trace = list(trace or [])

    def to_dict(self) -> Dict[str, Any]:
        payload = super().to_dict()
        payload['trace'] = [[float(a), float(q1)] for a, q1 in self.trace]
        return payload


class StepSizeError(ShootingError):
    """Raised when an integration step underflows."""
    pass


class ConfigError(RadfixError):
    """Raised when a run configuration is invalid; lists every offending key."""

    def __init__(self, problems: List[str]):
        super().__init__("; ".join(problems) if problems else "invalid configuration")
        self.problems = list(problems)

    def to_dict(self) -> Dict[str, Any]:
        payload = super().to_dict()
        payload['problems'] = self.problems
        return payload
