"""
Persistence of run results: profile and sweep CSV files and the JSON report.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from core.model import ProfilePair
from utils.helpers import format_float, json_ready

logger = logging.getLogger(__name__)

PROFILE_HEADER = ['r', 'Q', 'Qprime', 'density', 'potential']
SWEEP_HEADER = ['m', 'central_density', 'iterations', 'certified', 'residual_sup']


class SweepRow:
    """One mass of a sweep; failed masses keep empty numeric cells."""

    def __init__(
        self,
        m: float,
        central_density: Optional[float] = None,
        iterations: Optional[int] = None,
        certified: bool = False,
        residual_sup: Optional[float] = None,
        error: Optional[str] = None,
    ):
        self.m = m
        self.central_density = central_density
        self.iterations = iterations
        self.certified = certified
        self.residual_sup = residual_sup
        self.error = error

    def cells(self) -> List[str]:
        return [
            format_float(self.m),
            '' if self.central_density is None else format_float(self.central_density),
            '' if self.iterations is None else str(self.iterations),
            'true' if self.certified else 'false',
            '' if self.residual_sup is None else format_float(self.residual_sup),
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'm': self.m,
            'central_density': self.central_density,
            'iterations': self.iterations,
            'certified': self.certified,
            'residual_sup': self.residual_sup,
            'error': self.error,
        }


class ReportRepository:
    """Writes result files; output is byte-identical for identical inputs."""

    def __init__(self, report_path: Path):
        self.report_path = Path(report_path)

    def _prepare(self, path: Path):
        path.parent.mkdir(parents=True, exist_ok=True)

    def write_profile(
        self,
        path: Path,
        profile: ProfilePair,
        density: np.ndarray,
        potential: np.ndarray,
    ) -> Path:
        path = Path(path)
        self._prepare(path)
        with path.open('w', encoding='utf-8', newline='') as handle:
            writer = csv.writer(handle, lineterminator='\n')
            writer.writerow(PROFILE_HEADER)
            columns = (profile.grid.nodes, profile.q, profile.qprime, density, potential)
            for row in zip(*columns):
                writer.writerow([format_float(float(x)) for x in row])
        logger.info(f"Wrote profile with {profile.grid.N + 1} rows to {path}")
        return path

    def write_sweep(self, path: Path, rows: Iterable[SweepRow]) -> Path:
        path = Path(path)
        self._prepare(path)
        with path.open('w', encoding='utf-8', newline='') as handle:
            writer = csv.writer(handle, lineterminator='\n')
            writer.writerow(SWEEP_HEADER)
            for row in rows:
                writer.writerow(row.cells())
        logger.info(f"Wrote sweep table to {path}")
        return path

    def write_report(self, sections: Dict[str, Any]) -> Path:
        """Write the JSON report; keys are params, certificate, solve, verify, sweep, error."""
        self._prepare(self.report_path)
        payload = json.dumps(json_ready(sections), indent=2, sort_keys=True, allow_nan=False)
        self.report_path.write_text(payload + '\n', encoding='utf-8')
        logger.info(f"Wrote report to {self.report_path}")
        return self.report_path
