"""Shared fixtures and the acceptance summary printed after the run."""
import numpy as np
import pytest

ACCEPTANCE = {}


def record(criterion, ok, detail):
    """Store one acceptance outcome and echo it (visible with ``-s``)."""
    line = f"CRITERION {criterion:>2}: {'PASS' if ok else 'FAIL'} | {detail}"
    ACCEPTANCE[criterion] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
