import numpy as np
import pytest

from gne_esc.game_model import QuadraticGame, cournot_game


@pytest.fixture
def cournot():
    return cournot_game()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_quadratic(rng, n, margin=0.5, symmetric_m=False):
    """Random quadratic game whose reduced matrix is strictly diagonally dominant."""
    D = np.zeros((n, n, n))
    b = rng.normal(size=(n, n))
    c = rng.normal(size=n)
    for i in range(n):
        A = rng.normal(scale=0.3, size=(n, n))
        A = 0.5 * (A + A.T)
        off = np.abs(A[i]).sum() - abs(A[i, i])
        A[i, i] = off + margin + rng.uniform(0.0, 1.0)
        D[i] = A
    if symmetric_m:
        # make M symmetric by copying row entries across players
        M = np.array([D[i, i] for i in range(n)])
        M = 0.5 * (M + M.T)
        for i in range(n):
            D[i, i, :] = M[i]
            D[i, :, i] = M[i]
    demands = rng.uniform(0.5, 2.0, size=n)
    return QuadraticGame(D=D, b=b, c=c, demands=demands)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
