"""Shared fixtures: the three reference transforms and the report hook.

The acceptance tests append one human-readable line each to
ACCEPTANCE_REPORT; the terminal-summary hook prints the collected lines
after the normal pytest output so a log capture always contains an
explicit pass/fail line per criterion.
"""

import pytest

from lapdecon.laplace import RationalLaplaceKernel

ACCEPTANCE_REPORT = []


def record(line: str) -> None:
    ACCEPTANCE_REPORT.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_REPORT:
        terminalreporter.write_line(line)


@pytest.fixture
def g1():
    """1/(1 + s): relative degree 1, single real pole."""
    return RationalLaplaceKernel((1.0,), (1.0, 1.0))


@pytest.fixture
def g2():
    """1/(1 + s)^2: relative degree 2, double pole."""
    return RationalLaplaceKernel((1.0,), (1.0, 2.0, 1.0))


@pytest.fixture
def g3():
    """(2 + s)/(1 + s)^2: relative degree 1, a finite zero at -2."""
    return RationalLaplaceKernel((2.0, 1.0), (1.0, 2.0, 1.0))
