"""
Formatting helpers for result files.
"""

import math
from pathlib import Path
from typing import Any

FLOAT_DIGITS = 17


def format_float(value: float) -> str:
    """17 significant digits; round-trips exactly."""
    return f"{value:.{FLOAT_DIGITS}g}"


def json_ready(value: Any) -> Any:
    """Recursively convert numpy scalars, paths and tuples; non-finite floats become None."""
    if isinstance(value, dict):
        return {str(k): json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_ready(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, int):
        return int(value)
    if hasattr(value, 'item'):
        return json_ready(value.item())
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    return value
