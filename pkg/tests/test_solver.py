"""
Tests for Picard iteration, the ODE residual and the cone checks.
"""

import dataclasses
import math

import numpy as np
import pytest

from core.exceptions import DivergenceError, DomainError, NonConvergenceError
from core.model import ProblemParams, ProfilePair, make_grid, pair_norm
from services.certify import certify
from services.operator import FixedPointOperator
from services.sampling import sample_cone_profile, trial_generators
from services.solver import (
    a_posteriori_bound,
    cone_check,
    cone_invariance_trials,
    convergence_order,
    empirical_rate,
    picard_solve,
    residual,
)


class TestHelpers:
    """Rate and bound bookkeeping."""

    def test_a_posteriori_bound(self):
        """Test the Banach error estimate."""
        assert a_posteriori_bound(0.5, 1e-6) == pytest.approx(1e-6)
        assert a_posteriori_bound(0.0, 1.0) == 0.0
        with pytest.raises(DomainError):
            a_posteriori_bound(1.0, 1e-6)

    def test_empirical_rate(self):
        """Test the geometric mean of update ratios."""
        assert empirical_rate([1.0, 0.1, 0.01, 0.001]) == pytest.approx(0.1)
        assert empirical_rate([1.0]) == 0.0
        assert empirical_rate([0.0]) == 0.0

    def test_convergence_order(self):
        """Test the observed order under mesh doubling."""
        assert convergence_order(4e-4, 1e-4) == pytest.approx(2.0)


class TestPicard:
    """Fixed-point iteration of T."""

    def test_first_iterate_from_zero(self, grid, params):
        """Test that one step from zero gives m r^d."""
        report = picard_solve(params, grid, tol=1.0, max_iter=1, initial=ProfilePair.zeros(grid))
        np.testing.assert_array_equal(report.profile.q, params.m * grid.nodes ** params.d)
        assert report.iterations == 1

    def test_zero_mass(self, grid):
        """Test that zero mass converges to zero at once."""
        params = ProblemParams(d=3.0, m=0.0, allow_zero_mass=True)
        report = picard_solve(params, grid)
        assert report.converged
        assert report.iterations == 1
        assert np.all(report.profile.q == 0.0)
        assert np.all(report.profile.qprime == 0.0)
        assert report.residual_sup == 0.0

    @pytest.mark.slow
    def test_certified_convergence(self, fine_solution):
        """Test iteration count, rate and residual of a certified run."""
        params, certificate, report = fine_solution
        q = certificate.q_bound
        assert report.converged
        assert report.certified
        assert report.iterations <= math.ceil(math.log(1e-12 / params.m) / math.log(q))
        assert report.empirical_rate <= q + 0.02
        assert report.residual_sup <= 5e-6
        assert report.profile.q[-1] == params.m
        assert report.profile.q[0] == 0.0
        assert report.error_bound == pytest.approx(q * report.final_update / (1 - q))

    @pytest.mark.slow
    def test_fixed_point_consistency(self, fine_solution, fine_operator):
        """Test that the result is a fixed point."""
        params, _, report = fine_solution
        update = pair_norm(fine_operator.apply(report.profile) - report.profile, params.d)
        assert update <= 2e-12

    @pytest.mark.slow
    def test_updates_decrease(self, fine_solution):
        """Test that updates do not grow."""
        _, _, report = fine_solution
        updates = report.updates
        for previous, following in zip(updates, updates[1:]):
            assert following <= previous * (1 + 1e-9) + 1e-14

    def test_residual_second_order(self, params):
        """Test second-order decay of the ODE residual."""
        residuals = []
        for N in (128, 256):
            grid = make_grid(N, 2.0)
            report = picard_solve(params, grid, tol=1e-13, certificate=certify(params))
            residuals.append(report.residual_sup)
        assert convergence_order(*residuals) >= 1.8

    def test_divergence_guard(self, grid, params):
        """Test that leaving the guard ball raises DivergenceError."""
        certificate = dataclasses.replace(certify(params), chosen_rho=1e-3, q_bound=1e-3 / math.pi)
        with pytest.raises(DivergenceError) as excinfo:
            picard_solve(params, grid, certificate=certificate)
        assert excinfo.value.report.converged is False
        assert excinfo.value.to_dict()['iterations'] == 1

    def test_iteration_cap(self, grid, params):
        """Test NonConvergenceError with the last iterate."""
        with pytest.raises(NonConvergenceError) as excinfo:
            picard_solve(params, grid, tol=1e-30, max_iter=2)
        report = excinfo.value.report
        assert report.iterations == 2
        assert not report.converged
        assert report.profile.q[-1] == params.m

    def test_rejects_bad_arguments(self, grid, params):
        """Test invalid tolerance and iteration cap."""
        with pytest.raises(DomainError):
            picard_solve(params, grid, tol=0.0)
        with pytest.raises(DomainError):
            picard_solve(params, grid, max_iter=0)

    def test_shared_operator(self, grid, params):
        """Test that a shared operator gives identical results."""
        operator = FixedPointOperator(params, grid)
        first = picard_solve(params, grid, operator=operator)
        second = picard_solve(params, grid)
        np.testing.assert_array_equal(first.profile.q, second.profile.q)

    def test_report_serialises(self, grid, params):
        """Test the solve report dictionary."""
        payload = picard_solve(params, grid, certificate=certify(params)).to_dict()
        assert payload['converged'] is True
        assert payload['certified'] is True
        assert payload['iterations'] == len(payload['updates'])


class TestCone:
    """Monotonicity of Q r^{2-d}."""

    def test_boundary_profile(self):
        """Test Q = r, where g is constant."""
        grid = make_grid(64, 1.0)
        p = ProfilePair.from_function(grid, lambda r: r, lambda r: np.ones_like(r))
        check = cone_check(p, 3.0)
        assert check.passed
        assert check.min_slope == pytest.approx(0.0, abs=1e-12)

    def test_uniform_profile(self, grid, params):
        """Test Q = m r^3, where g increases."""
        p = ProfilePair.from_function(grid, lambda r: params.m * r ** 3, lambda r: 3 * params.m * r ** 2)
        check = cone_check(p, 3.0)
        assert check.passed
        assert check.min_slope > 0.0

    def test_decreasing_profile_fails(self, grid):
        """Test a profile outside the cone."""
        p = ProfilePair.from_function(grid, lambda r: r * (2 - r), lambda r: 2 - 2 * r)
        check = cone_check(p, 3.0)
        assert not check.passed
        assert check.min_slope == pytest.approx(-1.0, rel=1e-9)

    def test_operator_preserves_cone(self, grid):
        """Test that T maps cone profiles into the cone."""
        params = ProblemParams(d=3.0, m=1.0)
        check = cone_invariance_trials(params, grid, trials=50, seed=0)
        assert check.passed

    def test_trial_slope_is_relative_to_image_size(self, grid, params):
        """The reported slope is divided by max|Q r^{2-d}| of its own image."""
        operator = FixedPointOperator(params, grid)
        expected = []
        for rng in trial_generators(seed=2, trials=5):
            image = operator.apply(sample_cone_profile(rng, grid, params.d, params.m))
            g = image.q[1:] * grid.nodes[1:] ** (2.0 - params.d)
            expected.append(cone_check(image, params.d).min_slope / np.max(np.abs(g)))
        check = cone_invariance_trials(params, grid, trials=5, seed=2, operator=operator)
        assert check.min_slope == pytest.approx(min(expected), rel=1e-12)
        assert check.min_slope >= -1e-10

    def test_uncertified_solution_in_cone(self, grid):
        """Test that an uncertified solution stays in the cone."""
        params = ProblemParams(d=3.0, m=1.0)
        report = picard_solve(params, grid, tol=1e-12, max_iter=200)
        assert not report.certified
        assert report.cone_passed
        assert cone_check(report.profile, 3.0).passed


class TestResidual:
    """ODE defect of a profile."""

    def test_zero_profile(self, grid, params):
        """Test that the zero profile has no residual."""
        assert residual(ProfilePair.zeros(grid), params) == 0.0

    def test_uniform_profile_defect(self, grid, params):
        """Q = m r^3: the defect is R(n) Q = (3 m / sigma) m r^3, largest at the last checked node."""
        p = ProfilePair.from_function(grid, lambda r: params.m * r ** 3, lambda r: 3 * params.m * r ** 2)
        expected = 3 * params.m ** 2 / params.sigma_d * grid.nodes[grid.N - 2] ** 3
        assert residual(p, params) == pytest.approx(expected, rel=1e-6)
