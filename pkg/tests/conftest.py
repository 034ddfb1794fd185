import sys
import warnings

import pytest

from refract import fixtures
from refract.refraction import NonUniqueThresholdWarning, RefractionProblem
from refract.scale import build_scale


def pytest_configure(config):
    warnings.filterwarnings("ignore", category=NonUniqueThresholdWarning)


@pytest.fixture(scope="session")
def gamma2():
    f = fixtures.GAMMA2
    return RefractionProblem.build(f.model, f.delta, f.q)


@pytest.fixture(scope="session")
def hx1():
    f = fixtures.HX1
    return RefractionProblem.build(f.model, f.delta, f.q)


@pytest.fixture(scope="session")
def hxb():
    f = fixtures.HX1_BROWNIAN
    return RefractionProblem.build(f.model, f.delta, f.q)


@pytest.fixture(scope="session")
def sinh_scale():
    f = fixtures.BROWNIAN_SINH
    return build_scale(f.model, f.q)


@pytest.fixture(scope="session")
def hx1_bstar(hx1):
    return hx1.b_star()


@pytest.fixture(scope="session")
def hxb_bstar(hxb):
    return hxb.b_star()




def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
