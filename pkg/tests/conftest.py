import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion."""
    lines = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(number, passed, detail):
        lines[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
