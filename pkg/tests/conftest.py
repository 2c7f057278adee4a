import numpy as np
import pytest

from funmodal.grid import CurveSample, Grid


def random_shifted_sample(rng, n, m, scale=1.0):
    """Smooth-ish random curves: random walks, shifted to start at zero."""
    steps = rng.standard_normal((n, m)) * scale / np.sqrt(m)
    vals = np.cumsum(steps, axis=1)
    return CurveSample(Grid(m), vals - vals[:, :1])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
