import numpy as np
import pytest

# 3x4 matrix with an exact nonnegative rank-3 factorization EXAMPLE_W @ EXAMPLE_H
EXAMPLE_X = np.array([[0.0, 1, 1, 1], [1, 0, 1, 1], [1, 1, 0, 1]])
EXAMPLE_W = np.array([[0.0, 1, 1], [1, 0, 1], [1, 1, 0]])
EXAMPLE_H = np.array([[1.0, 0, 0, 0.5], [0, 1, 0, 0.5], [0, 0, 1, 0.5]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def example_x():
    return EXAMPLE_X.copy()


# -- acceptance report: one line per criterion, printed after the run --------

_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """``record(number, passed, detail)``; returns ``passed`` for chaining."""

    def record(number: int, passed: bool, detail: str) -> bool:
        _CRITERIA[number] = (bool(passed), detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}")
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        ok, detail = _CRITERIA[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
