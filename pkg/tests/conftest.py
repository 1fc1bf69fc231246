import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("pkg", deadline=None, suppress_health_check=[HealthCheck.too_slow], max_examples=60)
settings.load_profile("pkg")

TESTS = Path(__file__).parent


@pytest.fixture
def shim_command():
    """External backend command that runs HiGHS on the written MPS file."""
    return f"{sys.executable} {TESTS / 'highs_shim.py'} {{mps}} {{sol}}"


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
