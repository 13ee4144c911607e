import numpy as np
import pytest
from hypothesis import settings, strategies as st

from thomascore.tridiag import TridiagonalSystem

settings.register_profile("default", deadline=None)
settings.load_profile("default")


def random_dominant(rng, n, margin=0.1, scale=1.0):
    """Row diagonally dominant system with random signs."""
    a = rng.uniform(-1, 1, n) * scale
    c = rng.uniform(-1, 1, n) * scale
    a[0] = 0.0
    c[-1] = 0.0
    mag = np.abs(a) + np.abs(c) + rng.uniform(margin, 1.0, n) * scale
    b = mag * rng.choice([-1.0, 1.0], n)
    y = rng.uniform(-1, 1, n)
    return TridiagonalSystem(a, b, c, y)


def bounded_system(rng, n):
    """Positive increasing diagonal with the pivot-growth conditions met."""
    na = rng.uniform(0.05, 0.45)
    nc = rng.uniform(0.05, 0.45)
    b0 = rng.uniform(1.05, 3.0)
    step_lo = na * nc / b0
    step_hi = nc
    steps = rng.uniform(step_lo, step_hi, n - 1)
    b = b0 + np.concatenate([[0.0], np.cumsum(steps)])
    a = rng.uniform(-na, na, n)
    c = rng.uniform(-nc, nc, n)
    a[0], c[-1] = 0.0, 0.0
    # pin the norms so the bounds use the drawn values
    a[min(1, n - 1)] = na if n > 1 else 0.0
    c[0] = nc
    # keep row dominance
    b = np.maximum(b, np.abs(a) + np.abs(c) + 1e-3)
    b = np.maximum.accumulate(b)
    y = rng.uniform(-1, 1, n)
    return TridiagonalSystem(a, b, c, y)


@st.composite
def dominant_systems(draw, min_n=2, max_n=64):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_dominant(np.random.default_rng(seed), n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_system():
    return TridiagonalSystem([0, 1, 1], [4, 4, 4], [1, 1, 0], [5, 6, 5])


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    report = getattr(mod, "REPORT", None)
    if not report:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(report):
        terminalreporter.write_line(report[k])
