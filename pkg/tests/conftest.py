import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def cmat(rng, M, scale=1.0):
    return scale * (rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M)))


def cvec(rng, M, scale=1.0):
    return scale * (rng.standard_normal(M) + 1j * rng.standard_normal(M))


def random_lindblad(rng, M, n_ops=2, scale=0.5):
    from gaussrep.quadratic_master_equation import LindbladSpec

    h1 = cmat(rng, M, scale)
    h2 = cmat(rng, M, scale)
    ops = tuple((cvec(rng, M, scale), cvec(rng, M, scale)) for _ in range(n_ops))
    return LindbladSpec((h1 + h1.conj().T) / 2, (h2 + h2.T) / 2, ops)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS):
            terminalreporter.write_line(line)
