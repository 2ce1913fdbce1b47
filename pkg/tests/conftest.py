import numpy as np
import pytest

from ppassive.circuits import (OddPower, OpAmpParams, build_bistable,
                               build_ladder_oscillator, build_mixed_feedback,
                               build_rc_ladder3)

# component values shared by the example circuits
R1 = 3.3e3
R0 = 1e6
C0 = 15.9e-9
PHI = OddPower(5, 12.0)


def opamp(alpha):
    return OpAmpParams(R0, C0, alpha, PHI)


@pytest.fixture
def ladder():
    return build_rc_ladder3(R1, 200e-6)


@pytest.fixture
def oscillator():
    return build_ladder_oscillator(R1, 200e-6, opamp(0.1))


@pytest.fixture
def bistable():
    return build_bistable(R1, 1e3, 100e-6, opamp(1.0))


@pytest.fixture
def mixed():
    return build_mixed_feedback(R1, R1, 1e3, 1e3, 100e-6, 200e-6, opamp(1.0))


def random_stable_system(rng, n):
    """Minimal (generically) stable realization with mixed real/complex poles."""
    blocks = []
    k = 0
    while k < n:
        if n - k >= 2 and rng.random() < 0.4:
            re, im = -rng.uniform(0.1, 10.0), rng.uniform(0.1, 5.0)
            blocks.append(np.array([[re, im], [-im, re]]))
            k += 2
        else:
            blocks.append(np.array([[-rng.uniform(0.1, 10.0)]]))
            k += 1
    D = np.zeros((n, n))
    i = 0
    for b in blocks:
        m = b.shape[0]
        D[i:i + m, i:i + m] = b
        i += m
    T = rng.standard_normal((n, n)) + 2.0 * np.eye(n)
    A = T @ D @ np.linalg.inv(T)
    return A, rng.standard_normal((n, 1)), rng.standard_normal((1, n))


# -- acceptance reporting ------------------------------------------------------

_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    num, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        _CRITERIA[num] = (title, rep.passed, rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        title, ok, secs = _CRITERIA[num]
        terminalreporter.write_line(
            f"criterion {num}: {'PASS' if ok else 'FAIL'}  {title}  ({secs:.1f} s)")
