import numpy as np
import pytest

from pwsense.core import IqFrame


def random_frame(rng, n, fs=1000.0, f0=2.4e9):
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return IqFrame(x, fs, f0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
