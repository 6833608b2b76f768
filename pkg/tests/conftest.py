"""
Test configuration and fixtures for radfix tests.
"""

import math

import pytest

from core.model import NonlinearitySpec, ProblemParams, make_grid
from services.certify import certify
from services.operator import FixedPointOperator
from services.solver import picard_solve


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: end-to-end runs on the fine N = 2048 grid")


def linear_nonlinearity(L: float) -> NonlinearitySpec:
    """R(z) = L z as a two-sample table; used where a Lipschitz constant other than 1 is needed."""
    return NonlinearitySpec.tabulated([(0.0, 0.0), (1.0, L)], lipschitz_L=L)


def closed_form_image(r, m):
    """T applied to m r^3 for d = 3, R = Id: value and derivative."""
    c = 3.0 * m ** 2 / (40.0 * math.pi)
    return m * r ** 3 + c * r ** 3 * (1.0 - r ** 2), 3.0 * m * r ** 2 + c * (3.0 * r ** 2 - 5.0 * r ** 4)


@pytest.fixture
def grid():
    """Default moderate graded grid."""
    return make_grid(512, 2.0)


@pytest.fixture(scope="session")
def fine_grid():
    return make_grid(2048, 2.0)


@pytest.fixture
def params():
    """d = 3, m = 0.1, R = Id."""
    return ProblemParams(d=3.0, m=0.1)


@pytest.fixture(scope="session")
def fine_solution(fine_grid):
    """Certified Picard fixed point at d = 3, m = 0.1, N = 2048."""
    params = ProblemParams(d=3.0, m=0.1)
    certificate = certify(params)
    report = picard_solve(params, fine_grid, tol=1e-12, max_iter=200, certificate=certificate)
    return params, certificate, report


@pytest.fixture(scope="session")
def fine_operator(fine_grid):
    return FixedPointOperator(ProblemParams(d=3.0, m=0.1), fine_grid)
