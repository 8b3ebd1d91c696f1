from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rcpos.dsl import catalog

settings.register_profile(
    "rcpos",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("rcpos")


def random_hermitian(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (a + a.conj().T) / 2


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_point(m, seed: int = 0) -> np.ndarray:
    return m.sample_points(1, seed)[0]


@pytest.fixture(scope="session")
def fs1():
    return catalog("fubini_study", 1)


@pytest.fixture(scope="session")
def fs2():
    return catalog("fubini_study", 2)


@pytest.fixture(scope="session")
def hopf2():
    return catalog("hopf", 2)


@pytest.fixture(scope="session")
def rank2():
    return catalog("rank2_test")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
