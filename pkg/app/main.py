"""
radfix command-line entry point: solve, certify, verify and sweep.

    radfix <solve|certify|verify|sweep> --config <path> [--mass-list m1,m2,...]
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from dotenv import dotenv_values

from app.config import RunConfig, load_config
from core.exceptions import (
    ConfigError,
    ConvergenceError,
    DomainError,
    EvaluationError,
    RadfixError,
    ShootingError,
)
from core.model import ProblemParams, RadialGrid
from data.repositories import ReportRepository, SweepRow
from services.certify import ContractionCertificate, certify, empirical_estimates
from services.operator import density, potential, total_mass
from services.oracle import compare_profiles, shoot_solve
from services.solver import SolveReport, picard_solve, residual
from utils.logger import default_log_level, get_logger, setup_logging

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NO_CONVERGENCE = 2
EXIT_UNCERTIFIED = 3
EXIT_ORACLE_MISMATCH = 4
EXIT_ORACLE_FAILURE = 5


def _params_section(config: RunConfig, params: Optional[ProblemParams]) -> Dict[str, Any]:
    section: Dict[str, Any] = {
        'dimension': config.dimension,
        'mass': config.mass,
        'grid': {'n': config.grid_n, 'gamma': config.grid_gamma},
        'solver': {'tol': config.solver_tol, 'max_iter': config.solver_max_iter},
        'seed': config.seed,
    }
    if params is not None:
        problem = params.to_dict()
        if config.mass is None:
            # certify without a mass uses a placeholder
            del problem['m']
        section['problem'] = problem
    return section


def _iterate(
    params: ProblemParams,
    grid: RadialGrid,
    config: RunConfig,
    certificate: ContractionCertificate,
) -> SolveReport:
    return picard_solve(
        params,
        grid,
        tol=config.solver_tol,
        max_iter=config.solver_max_iter,
        certificate=certificate if certificate.certified else None,
    )


def _solve_section(report: SolveReport, params: ProblemParams) -> Dict[str, Any]:
    section = report.to_dict()
    profile = report.profile
    section['mass_at_boundary'] = float(profile.q[-1])
    section['total_mass'] = total_mass(profile, params)
    section['central_density'] = float(density(profile, params)[0])
    return section


def cmd_solve(config: RunConfig) -> int:
    repository = ReportRepository(config.output_report_json)
    if config.mass is None:
        raise ConfigError(["mass: required for solve"])
    params = config.params()
    grid = config.grid()
    sections: Dict[str, Any] = {'params': _params_section(config, params)}
    certificate = certify(params)
    sections['certificate'] = certificate.to_dict()

    try:
        report = _iterate(params, grid, config, certificate)
    except (ConvergenceError, EvaluationError) as e:
        logger.error(f"Solve failed: {e}")
        report = getattr(e, 'report', None)
        if report is not None:
            sections['solve'] = report.to_dict()
        sections['error'] = e.to_dict()
        repository.write_report(sections)
        return EXIT_NO_CONVERGENCE

    sections['solve'] = _solve_section(report, params)
    repository.write_profile(
        config.output_profile_csv,
        report.profile,
        density(report.profile, params),
        potential(report.profile, params),
    )
    repository.write_report(sections)
    return EXIT_OK


def cmd_certify(config: RunConfig) -> int:
    repository = ReportRepository(config.output_report_json)
    params = config.params()
    grid = config.grid()
    sections: Dict[str, Any] = {'params': _params_section(config, params)}

    certificate = certify(params)
    section = certificate.to_dict()
    if certificate.certified:
        estimates = empirical_estimates(
            params, grid, certificate.chosen_rho, config.certify_trials, config.seed
        )
        section['empirical_estimates'] = estimates.to_dict()
    sections['certificate'] = section
    repository.write_report(sections)

    if config.mass is not None and not certificate.certified:
        logger.warning(f"Mass {config.mass} exceeds the certified maximum {certificate.m_max:.6g}")
        return EXIT_UNCERTIFIED
    return EXIT_OK


def cmd_verify(config: RunConfig) -> int:
    repository = ReportRepository(config.output_report_json)
    if config.mass is None:
        raise ConfigError(["mass: required for verify"])
    params = config.params()
    grid = config.grid()
    sections: Dict[str, Any] = {'params': _params_section(config, params)}

    certificate = certify(params)
    sections['certificate'] = certificate.to_dict()
    try:
        report = _iterate(params, grid, config, certificate)
    except (ConvergenceError, EvaluationError) as e:
        logger.error(f"Solve failed: {e}")
        sections['error'] = e.to_dict()
        repository.write_report(sections)
        return EXIT_NO_CONVERGENCE
    sections['solve'] = _solve_section(report, params)

    try:
        shot = shoot_solve(params, grid, tol=config.oracle_tol)
    except ShootingError as e:
        logger.error(f"Shooting oracle failed: {e}")
        sections['error'] = e.to_dict()
        repository.write_report(sections)
        return EXIT_ORACLE_FAILURE

    discrepancy = compare_profiles(report.profile, shot.profile, params.d)
    agreed = discrepancy.weighted_pair_diff <= config.verify_tolerance
    sections['verify'] = {
        **discrepancy._asdict(),
        'tolerance': config.verify_tolerance,
        'agreed': agreed,
        'picard_residual': report.residual_sup,
        'oracle_residual': residual(shot.profile, params),
        'oracle': shot.to_dict(),
    }
    repository.write_report(sections)
    if not agreed:
        logger.warning(f"Picard and shooting profiles differ by {discrepancy.weighted_pair_diff:.3e}")
        return EXIT_ORACLE_MISMATCH
    return EXIT_OK


def cmd_sweep(config: RunConfig, masses: Sequence[float]) -> int:
    repository = ReportRepository(config.output_report_json)
    if not masses:
        raise ConfigError(["--mass-list: at least one mass is required"])
    grid = config.grid()
    sections: Dict[str, Any] = {'params': _params_section(config, None)}

    rows: List[SweepRow] = []
    for m in masses:
        try:
            params = config.params(mass=m)
            report = _iterate(params, grid, config, certify(params))
            rows.append(SweepRow(
                m=m,
                central_density=float(density(report.profile, params)[0]),
                iterations=report.iterations,
                certified=report.certified,
                residual_sup=report.residual_sup,
            ))
        except RadfixError as e:
            logger.error(f"Sweep mass {m} failed: {e}")
            rows.append(SweepRow(m=m, error=str(e)))

    repository.write_sweep(config.output_sweep_csv, rows)
    sections['sweep'] = [row.to_dict() for row in rows]
    repository.write_report(sections)
    return EXIT_OK


def _parse_masses(text: Optional[str]) -> List[float]:
    if not text:
        return []
    try:
        return [float(item) for item in text.split(',') if item.strip()]
    except ValueError:
        raise ConfigError([f"--mass-list: cannot parse '{text}'"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='radfix',
        description='Stationary radial profiles of self-gravitating particles by certified fixed-point iteration',
    )
    parser.add_argument('command', choices=['solve', 'certify', 'verify', 'sweep'])
    parser.add_argument('--config', type=Path, required=True, help='Path to the key = value config file')
    parser.add_argument('--mass-list', type=str, default=None, help='Comma-separated masses for sweep')
    parser.add_argument('--log-level', type=str, default=None, help='Logging level (default LOG_LEVEL or INFO)')
    parser.add_argument('--log-file', type=str, default=None)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level or default_log_level(), args.log_file)

    report_path: Optional[Path] = None
    try:
        config = load_config(args.config)
        report_path = config.output_report_json
        if args.command == 'solve':
            return cmd_solve(config)
        if args.command == 'certify':
            return cmd_certify(config)
        if args.command == 'verify':
            return cmd_verify(config)
        return cmd_sweep(config, _parse_masses(args.mass_list))
    except (ConfigError, DomainError) as e:
        logger.error(f"Configuration error: {e}")
        _write_error_report(args.config, report_path, e)
        return EXIT_CONFIG
    except RadfixError as e:
        logger.error(f"{args.command} failed: {e}")
        _write_error_report(args.config, report_path, e)
        if isinstance(e, ShootingError):
            return EXIT_ORACLE_FAILURE
        return EXIT_NO_CONVERGENCE


def _write_error_report(config_path: Path, report_path: Optional[Path], error: RadfixError):
    if report_path is None:
        report_path = _fallback_report_path(config_path)
    ReportRepository(report_path).write_report({'error': error.to_dict()})


def _fallback_report_path(config_path: Path) -> Path:
    """Report path when the config itself could not be loaded."""
    try:
        declared = dotenv_values(config_path, interpolate=False).get('output.report_json')
    except OSError:
        declared = None
    return Path(declared.strip()) if declared else Path('report.json')


if __name__ == "__main__":
    sys.exit(main())
