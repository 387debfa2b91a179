import numpy as np
import pytest

from fracflow.config import ProblemConfig
from fracflow.experiments import simulate

# acceptance lines collected by tests/test_acceptance.py, printed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":").split(".")[0])):
        terminalreporter.write_line(line)


def default_config(**changes) -> ProblemConfig:
    base = dict(r=0.5, s=0.5, c=0.5, inner_radius=1.0, truncation_radius=20.0, n_cells=2000)
    base.update(changes)
    return ProblemConfig(**base)


def small_config(n=64, L=4.0, **changes) -> ProblemConfig:
    base = dict(r=0.5, s=0.3, c=0.4, inner_radius=1.0, truncation_radius=L, n_cells=n)
    base.update(changes)
    return ProblemConfig(**base)


@pytest.fixture(scope="session")
def default_trajectory():
    """r = s = c = 1/2 on the default grid, delta data, snapshots 0.01 .. 100."""
    return simulate(default_config())


@pytest.fixture(scope="session")
def small_time_trajectory():
    """r = 1/2, s = 1/4, c = 1/2 at n = 4000, evolved through the early window."""
    return simulate(default_config(s=0.25, n_cells=4000, t_end=0.5))


@pytest.fixture
def rng():
    return np.random.default_rng(20260101)
