import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("physid", max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("physid")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
