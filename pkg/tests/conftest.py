import numpy as np
import pytest

from qic import _backend, _kernels

BACKENDS = ["numpy"] + (["numba"] if _backend.HAVE_NUMBA else [])


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile (or load cached) numba kernels before any timed test
    for backend in BACKENDS:
        _kernels.jacobi_eigh(np.eye(2, dtype=complex)[None], backend=backend)


@pytest.fixture
def rng():
    return np.random.default_rng(20011008)


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def random_hermitian(rng, n):
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return x + x.conj().T


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance")
        for n in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[n])
