"""Shared fixtures: cached profiles on the standard test grids."""
import numpy as np
import pytest

from wavedecay import FluxSpec, Grid1D, construct_burgers_profile, construct_kdvb_profile


def logistic(x):
    return 0.5 * (1.0 - np.tanh(0.5 * np.asarray(x)))


@pytest.fixture(scope="session")
def burgers_flux():
    return FluxSpec.burgers_quadratic()


@pytest.fixture(scope="session")
def kdvb_flux():
    return FluxSpec.kdvb_cubic(2.0)


@pytest.fixture(scope="session")
def burgers_profile(burgers_flux):
    return construct_burgers_profile(burgers_flux, Grid1D(-40.0, 40.0, 1601))


@pytest.fixture(scope="session")
def kdvb_profile(kdvb_flux):
    return construct_kdvb_profile(kdvb_flux, 3.0, Grid1D(-40.0, 40.0, 1601))


@pytest.fixture(scope="session")
def periodic_burgers(burgers_flux):
    """Profile on an even-sized grid suitable for the spectral solvers."""
    return construct_burgers_profile(burgers_flux, Grid1D(-60.0, 60.0, 1024))


@pytest.fixture(scope="session")
def periodic_kdvb(kdvb_flux):
    return construct_kdvb_profile(kdvb_flux, 3.0, Grid1D(-60.0, 60.0, 1024))


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, title: str, passed: bool, detail: str) -> str:
    line = f"[{number:2d}] {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
