import numpy as np
import pytest


def random_admissible(L, rng):
    """Random covariance ``U diag(n) U^dagger`` with ``n`` in [0, 1]."""
    A = rng.normal(size=(L, L)) + 1j * rng.normal(size=(L, L))
    U, _ = np.linalg.qr(A)
    n = rng.uniform(0, 1, L)
    return (U * n) @ U.conj().T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def admissible(rng):
    return lambda L: random_admissible(L, rng)


# ------------------------------------------------------------ acceptance summary

ACCEPTANCE = {}


def record(criterion: int, passed: bool, detail: str = "") -> None:
    ACCEPTANCE[criterion] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
