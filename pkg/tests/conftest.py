import math
import sys

import pytest
from hypothesis import settings

from autoresonance.asymptotics import extend_coeffs, reference_series
from autoresonance.dynamics import ModelParams

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def fig2_params():
    """lambda = 1, delta = 0.5, f = 0.2 (the phase-plane parameters)."""
    return ModelParams(lam=1.0, delta=0.5, f=0.2)


@pytest.fixture(scope="session")
def ref1(fig2_params):
    return reference_series(fig2_params, 1)


@pytest.fixture(scope="session")
def series1(fig2_params):
    return extend_coeffs(fig2_params, "minus", 1)


SQRT3_2 = math.sqrt(3.0) / 2.0


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
