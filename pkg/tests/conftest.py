import numpy as np
import pytest
import scipy.sparse as sp

from slrf.sparse import CsrMatrix


def random_sparse(n, density=0.1, seed=0, complex_=False, m=None):
    rng = np.random.default_rng(seed)
    m = n if m is None else m
    S = sp.random(n, m, density=density, random_state=rng, format="csr")
    if complex_:
        S = S + 1j * sp.random(n, m, density=density, random_state=rng, format="csr")
    return CsrMatrix.from_scipy(S)


def random_spd(n, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, n))
    return X @ X.T + n * np.eye(n)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# -- acceptance verdict lines ----------------------------------------------------

_VERDICTS = {}


class Verdict:
    """Records one PASS/FAIL line per acceptance criterion, then asserts."""

    def __call__(self, key, ok, detail):
        line = f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}"
        _VERDICTS[key] = line
        print(line)
        assert ok, line


@pytest.fixture
def verdict():
    return Verdict()


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_VERDICTS, key=str):
        terminalreporter.write_line(_VERDICTS[key])
