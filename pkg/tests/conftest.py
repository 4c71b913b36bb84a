import numpy as np
import pytest

from sgqed.hilbert import build_space


@pytest.fixture(scope="session")
def space20():
    return build_space(20)


@pytest.fixture(scope="session")
def space35():
    return build_space(35)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
