import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from ocsmm.data import GaussianSummary, Group

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_psd(rng, n, rank=None):
    """Random PSD matrix with unit-ish scale; ``rank`` < n makes it singular."""
    A = rng.standard_normal((n, rank or n))
    K = A @ A.T / (rank or n)
    return (K + K.T) / 2


def random_groups(rng, count, d=2, sizes=(3, 8)):
    return [Group(f"g{i}", rng.standard_normal((rng.integers(*sizes), d))) for i in range(count)]


def random_summary(rng, d):
    A = rng.standard_normal((d, d)) * 0.5
    return GaussianSummary(rng.standard_normal(d) * 0.5, A @ A.T + 0.05 * np.eye(d))


@st.composite
def point_groups(draw, min_groups=2, max_groups=6, d=2):
    seed = draw(st.integers(0, 2**32 - 1))
    count = draw(st.integers(min_groups, max_groups))
    return random_groups(np.random.default_rng(seed), count, d)


@st.composite
def psd_grams(draw, min_size=1, max_size=7):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(min_size, max_size))
    rank = draw(st.integers(1, n))
    return random_psd(np.random.default_rng(seed), n, rank)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance criteria register "PASS"/"FAIL" lines here; printed after the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
