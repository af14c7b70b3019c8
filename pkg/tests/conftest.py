import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from isodiff.generate import random_state

settings.register_profile(
    "default", deadline=None, max_examples=25, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def cmat(rng, m):
    return rng.uniform(-1, 1, (m, m)) + 1j * rng.uniform(-1, 1, (m, m))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def state22():
    return random_state(7, 2, 2)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
