import numpy as np
import pytest

from kcsim import SystemParams, build_cat_frame


@pytest.fixture(scope="session")
def table1_params():
    return SystemParams()


@pytest.fixture(scope="session")
def frame13():
    """Shared cat frame at the reference operating point."""
    return build_cat_frame(1.3, 30)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def random_hermitian(rng, dim):
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (m + m.conj().T)
