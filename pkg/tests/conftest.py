import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dampnls.grid import Grid
from dampnls.groundstate import build_tables
from dampnls.modulation import default_frame

ACCEPTANCE_LOG = pytest.StashKey[dict]()

settings.register_profile("dampnls", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("dampnls")


@pytest.fixture(scope="session")
def grid():
    return Grid(1024, 16.0)


@pytest.fixture(scope="session")
def tables(grid):
    return build_tables(grid)


@pytest.fixture(scope="session")
def frame():
    return default_frame()


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Criterion number -> one-line verdict, echoed in the terminal summary."""
    return request.config.stash.setdefault(ACCEPTANCE_LOG, {})


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(ACCEPTANCE_LOG, {})
    if log:
        terminalreporter.section("acceptance criteria")
        for n in sorted(log):
            terminalreporter.write_line(log[n])
