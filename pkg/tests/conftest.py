import numpy as np
import pytest

from focaler_iou import Box


def random_box(rng, lo=0.0, hi=10.0):
    x = np.sort(rng.uniform(lo, hi, 2))
    y = np.sort(rng.uniform(lo, hi, 2))
    return Box.from_corners(x[0], y[0], x[1], y[1])


def random_pairs(n, seed):
    rng = np.random.default_rng(seed)
    return [(random_box(rng), random_box(rng)) for _ in range(n)]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the terminal summary repeats them all."""

    def report(name: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
        _CRITERIA.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
