import numpy as np
import pytest

from cpdsss.zc import generate_zc


@pytest.fixture(scope="session")
def basis64():
    return generate_zc(64, 1)


@pytest.fixture(scope="session")
def basis1024():
    return generate_zc(1024, 1)


@pytest.fixture()
def rng():
    return np.random.default_rng(0xC0FFEE)
