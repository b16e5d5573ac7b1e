import pytest

import singlimit as sl


@pytest.fixture(scope="session")
def fig1_params():
    return sl.WolbachiaParams(fu=1.12, du=0.27, delta=10 / 9, sf=0.1, sh=0.8, sigma=1.0)


@pytest.fixture(scope="session")
def fig2_params():
    return sl.WolbachiaParams(fu=1.12, du=0.27, delta=10 / 9, sf=0.0, sh=0.8,
                              sigma=1.0, mu=0.04)


@pytest.fixture(scope="session")
def grid601():
    return sl.Grid1D.from_spacing(-15.0, 15.0, 0.05)
