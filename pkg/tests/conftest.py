import itertools

import numpy as np
import pytest

from artifact.estimators import NoisyOracle


def deterministic(f):
    """Noise-free oracle around a plain function of theta."""
    return NoisyOracle(lambda theta, rng: f(theta), np.random.default_rng(0))


def all_signs(N):
    """Every vector in {-1, +1}^N."""
    return [np.array(s, dtype=float) for s in itertools.product((-1.0, 1.0), repeat=N)]


def random_quadratic(rng, N):
    B = rng.normal(size=(N, N))
    A = B @ B.T / N + np.eye(N)
    return 0.5 * (A + A.T), rng.normal(size=N)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# --- acceptance report -------------------------------------------------------

_ACCEPTANCE: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): exit criterion of the build")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None:
            _ACCEPTANCE.setdefault(mark.args[0], [mark.args[1], []])


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    if call.when == "call" or (call.when == "setup" and call.excinfo is not None):
        _ACCEPTANCE[mark.args[0]][1].append(call.excinfo is None)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, results = _ACCEPTANCE[number]
        if not results:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"[{status}] {number}. {title}")
