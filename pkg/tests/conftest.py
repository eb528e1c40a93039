import sys

import numpy as np
import pytest

from panelclust.panel import from_arrays


def random_panel(rng, n=4, T=6, p=2, intercept=True):
    x = rng.standard_normal((n, T, p))
    if intercept:
        x[:, :, 0] = 1.0
    beta = rng.standard_normal(p)
    y = x @ beta + rng.standard_normal((n, T))
    return from_arrays(y, x)


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


def pytest_terminal_summary(terminalreporter):
    """Print the acceptance criterion lines collected during the run."""
    lines = [
        line
        for module in list(sys.modules.values())
        for line in getattr(module, "ACCEPTANCE_LINES", ())
    ]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda text: text.split("criterion")[1]):
            terminalreporter.write_line(line)
