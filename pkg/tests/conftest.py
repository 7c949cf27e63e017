import sys

import numpy as np
import pytest

from windsum.copulas import Gumbel, Independence
from windsum.marginals import GumbelMax, PowerCurve, Weibull, farm_output_distribution
from windsum.pairsum import SumOptions, sum_distribution

ALPHA = 3.65


@pytest.fixture(scope="session")
def farm1():
    return farm_output_distribution(Weibull(2.0, 10.0), PowerCurve())


@pytest.fixture(scope="session")
def farm2():
    return farm_output_distribution(GumbelMax(10.0, 8.0), PowerCurve())


@pytest.fixture(scope="session")
def gumbel():
    return Gumbel(ALPHA)


@pytest.fixture(scope="session")
def default_sum(farm1, farm2, gumbel):
    return sum_distribution(farm1, farm2, gumbel, SumOptions(gmm_components=6))


@pytest.fixture(scope="session")
def independent_sum(farm1, farm2):
    return sum_distribution(farm1, farm2, Independence())


@pytest.fixture(scope="session")
def unequal_pair():
    """Farms with different rated powers, so all three regions are present."""
    a = farm_output_distribution(Weibull(2.0, 10.0), PowerCurve(rated=80.0))
    b = farm_output_distribution(GumbelMax(10.0, 8.0), PowerCurve(rated=130.0))
    return a, b


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
