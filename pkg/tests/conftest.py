import pytest
from hypothesis import HealthCheck, settings

from cantordyn.generic import generic_cont, generic_hom

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: acceptance criterion with a time limit")


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def hom1():
    return generic_hom(1, seed=3)


@pytest.fixture(scope="session")
def hom2():
    return generic_hom(2, seed=5)


@pytest.fixture(scope="session")
def cont1():
    return generic_cont(1, seed=2)


@pytest.fixture(scope="session")
def cont2():
    return generic_cont(2, seed=5)
