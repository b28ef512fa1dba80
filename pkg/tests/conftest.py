import sys

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


def pytest_terminal_summary(terminalreporter):
    """Print the one-line verdict of every acceptance criterion that ran."""
    lines = []
    for name, mod in list(sys.modules.items()):
        if name.split(".")[-1] == "test_acceptance":
            lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
