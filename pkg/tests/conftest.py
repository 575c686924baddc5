import numpy as np
import pytest

from meqa.synthgen import gen_rectangle, gen_swissroll, whiten


@pytest.fixture(scope="session")
def swissroll():
    return gen_swissroll(1000, seed=0)


@pytest.fixture(scope="session")
def swissroll_whitened(swissroll):
    return whiten(swissroll.U)


@pytest.fixture(scope="session")
def rectangle():
    return gen_rectangle(100, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = []


@pytest.fixture
def acceptance_lines():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
