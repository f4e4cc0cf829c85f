import logging

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from parallax.datasets import regular_polygon, unit_square
from parallax.model import Shell, UnionOfBalls, ball

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(autouse=True)
def _quiet_logs():
    logging.getLogger("parallax").setLevel(logging.WARNING)


@pytest.fixture
def ring16():
    return regular_polygon(16)


@pytest.fixture
def square():
    return unit_square()


@pytest.fixture
def shell():
    return Shell([0.0, 0.0], 0.8, 1.2)


@pytest.fixture
def ball15():
    return ball([0.0, 0.0], 1.5)


@pytest.fixture
def tiny_balls(ring16):
    return UnionOfBalls(ring16.points, np.full(len(ring16), 0.05))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
