import time
import warnings

import pytest
from hypothesis import HealthCheck, settings

from strobosim.experiments import figure2_experiment, figureS1_experiment
from strobosim.grid import make_grid

settings.register_profile(
    "default",
    deadline=None,
    max_examples=20,
    suppress_health_check=[HealthCheck.function_scoped_fixture, HealthCheck.too_slow],
)
settings.load_profile("default")

# wall-clock seconds of the shared experiment fixtures
TIMINGS = {}
# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def grid():
    return make_grid()


@pytest.fixture(scope="session")
def small_grid():
    return make_grid(128, 10.0)


@pytest.fixture(scope="session")
def figure2_result():
    start = time.perf_counter()
    result = figure2_experiment()
    TIMINGS["figure2"] = time.perf_counter() - start
    return result


@pytest.fixture(scope="session")
def figureS1_result():
    start = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        result = figureS1_experiment()
    TIMINGS["figureS1"] = time.perf_counter() - start
    return result


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
