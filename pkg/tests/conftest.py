import pytest
from hypothesis import settings

from cookiewalk.environment import Cookie, CookieStack, EnvironmentDistribution
from cookiewalk.lattice import LatticeSpec

# first calls into compiled code include JIT compilation
settings.register_profile("default", deadline=None)
settings.load_profile("default")

# Lines recorded by the acceptance suite, echoed in the terminal summary.
ACCEPTANCE_LINES = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: full-size acceptance criteria (slow)")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


Z = LatticeSpec.Z(1)
Z2 = LatticeSpec.Z(2)
FAIR = Cookie((0.5, 0.5))
UNIFORM4 = Cookie((0.25,) * 4)


def z_stack(n_cookies, right=0.75):
    return CookieStack((Cookie((right, 1 - right)),) * n_cookies, FAIR)


@pytest.fixture
def fair_z():
    return EnvironmentDistribution.degenerate(Z, 0.25, CookieStack((), FAIR))


@pytest.fixture
def one_cookie_z():
    return EnvironmentDistribution.degenerate(Z, 0.25, z_stack(1))


@pytest.fixture
def delta15_z():
    return EnvironmentDistribution.degenerate(Z, 0.25, z_stack(3))


@pytest.fixture
def bw_erw():
    first = Cookie((0.35, 0.15, 0.25, 0.25))
    return EnvironmentDistribution.degenerate(Z2, 0.1, CookieStack((first,), UNIFORM4))
