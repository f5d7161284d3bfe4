import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def upper_samples(rng, n, ymin=0.05, ymax=3.0, span=8.0):
    return rng.uniform(-span, span, n) + 1j * rng.uniform(ymin, ymax, n)


def disk_samples(rng, n, rmax=0.9):
    return rmax * np.sqrt(rng.uniform(0, 1, n)) * np.exp(2j * np.pi * rng.uniform(0, 1, n))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
