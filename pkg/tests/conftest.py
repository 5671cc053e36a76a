import functools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ripsolve import solutions
from ripsolve.catalog import catalog
from ripsolve.viscous import SolverOptions

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SWEEP_EPS = (1e-2, 3e-3, 1e-3)
SWEEP_TAU = 2e-4


@functools.lru_cache(maxsize=None)
def sweep(example: str, delta: float | None = None):
    """Vanishing-viscosity sweep shared across test modules (cached per session)."""
    spec = catalog(example, delta=delta) if delta is not None else catalog(example)
    return spec, solutions.vanishing_viscosity(spec.system, spec.q0, eps_sequence=SWEEP_EPS,
                                               opts=SolverOptions(step=SWEEP_TAU))


@pytest.fixture(scope="session")
def ex51():
    return catalog("ex51")


@pytest.fixture(scope="session")
def ex52():
    return catalog("ex52")


@pytest.fixture(scope="session")
def ex54():
    return catalog("ex54")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE: dict = {}


def record(criterion: int, passed: bool, detail: str):
    """Store one acceptance verdict; printed in the terminal summary."""
    ACCEPTANCE[criterion] = (bool(passed), detail)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not any("test_acceptance" in str(getattr(i, "fspath", "")) for i in terminalreporter.stats.get("passed", [])
               + terminalreporter.stats.get("failed", []) + terminalreporter.stats.get("xfailed", [])):
        return
    terminalreporter.section("acceptance criteria")
    for k in range(1, 12):
        passed, detail = ACCEPTANCE.get(k, (False, "not completed"))
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
