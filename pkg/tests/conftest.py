import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fgscan.dataset import from_arrays

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def three_subjects():
    # A(3, cause 1, z=1), B(2, cause 2, z=0), C(1, cause 1, z=-1)
    return from_arrays([3.0, 2.0, 1.0], [1, 2, 1], [[1.0], [0.0], [-1.0]])


@pytest.fixture
def g_hand():
    return from_arrays([1.0, 2.0, 3.0, 4.0], [1, 0, 1, 0], np.zeros((4, 1)))


_VERDICTS = []


@pytest.fixture
def verdict(request):
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def record(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} {label}" + (f": {detail}" if detail else "")
        _VERDICTS.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
