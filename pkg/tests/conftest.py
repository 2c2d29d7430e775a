import numpy as np
import pytest

from killing_yano import catalog


@pytest.fixture(scope="session")
def kna4():
    return catalog.build_kerr_nut_ads(2, 0)


@pytest.fixture(scope="session")
def kna5():
    return catalog.build_kerr_nut_ads(2, 1)


@pytest.fixture(scope="session")
def kna6():
    return catalog.build_kerr_nut_ads(3, 0)


@pytest.fixture(scope="session")
def kna7():
    return catalog.build_kerr_nut_ads(3, 1)


@pytest.fixture(scope="session")
def lmp5():
    return catalog.build_lmp5()


@pytest.fixture(scope="session")
def ortho3():
    return catalog.build_orthotoric(3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
