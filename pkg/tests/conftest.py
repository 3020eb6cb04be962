import numpy as np
import pytest

from mincontrast.geometry import PointPattern, RectWindow

ACCEPTANCE_LINES = []


def random_pattern(rng, n_max=50, m=2, window=None):
    window = window or RectWindow(0.0, 10.0, 0.0, 6.0)
    n = int(rng.integers(2 * m, n_max + 1))
    x = rng.uniform(window.xmin, window.xmax, n)
    y = rng.uniform(window.ymin, window.ymax, n)
    marks = np.concatenate([np.arange(1, m + 1), rng.integers(1, m + 1, n - m)])
    return PointPattern(x, y, marks, window, m)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def toy():
    """X1 = {(1,1), (2,1)}, X2 = {(1,2)} on [0,10]^2."""
    return PointPattern.from_types([[(1, 1), (2, 1)], [(1, 2)]], RectWindow.square(0, 10))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
