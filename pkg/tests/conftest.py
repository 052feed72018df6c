import numpy as np
import pytest
from hypothesis import settings

from dpbench.controllers import energy_lqr_baseline
from dpbench.dynamics import ModelParams
from dpbench.simulation import rollout

settings.register_profile("dpbench", max_examples=60, deadline=None)
settings.load_profile("dpbench")


@pytest.fixture(scope="session")
def params():
    return ModelParams()


@pytest.fixture(scope="session")
def baseline_traj(params):
    return rollout(energy_lqr_baseline("pendubot", params), "pendubot", params)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_acceptance = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    passed = _acceptance.get(number, (title, True))[1]
    if report.failed or (report.when == "call" and not report.passed):
        passed = False
    _acceptance[number] = (title, passed)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, passed = _acceptance[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {title}")
