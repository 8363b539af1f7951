import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lengthclust import Hierarchy, build_dissimilarity, unit_dissimilarity  # noqa: E402

U4_VALUES = [
    [0, 1, 4, 4],
    [1, 0, 4, 4],
    [4, 4, 0, 2],
    [4, 4, 2, 0],
]


@pytest.fixture
def u4():
    return build_dissimilarity(["1", "2", "3", "4"], U4_VALUES)


@pytest.fixture
def unit4():
    return unit_dissimilarity(4)


@pytest.fixture
def balanced():
    return Hierarchy.from_nested((("1", "2"), ("3", "4")))


@pytest.fixture
def crossed():
    return Hierarchy.from_nested((("1", "3"), ("2", "4")))


def random_matrix(n, rng, low=0.1, high=10.0, labels=None):
    labels = labels or [str(i + 1) for i in range(n)]
    x = rng.uniform(low, high, size=(n, n))
    x = np.triu(x, 1)
    return build_dissimilarity(labels, x + x.T)


_acceptance: dict[int, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    tag = getattr(getattr(item, "function", None), "criterion", None)
    if tag is None:
        return
    number, summary = tag
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _acceptance[number] = ("PASS" if report.passed else "FAIL", summary)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        status, summary = _acceptance[number]
        terminalreporter.write_line(f"criterion {number}: {status}: {summary}")
