import pytest
from hypothesis import settings

from apflow.cross_section import build_disk, build_rectangle

settings.register_profile("ci", max_examples=40, deadline=None)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def square():
    """Unit square with 41 sine modes per axis."""
    return build_rectangle(1.0, 1.0, 41)


@pytest.fixture(scope="session")
def small_square():
    return build_rectangle(1.0, 1.0, 15, samples=32)


@pytest.fixture(scope="session")
def disk():
    """Unit-area disk, 2048 radial cells, 200 radial Bessel modes."""
    return build_disk(normalized=True)


@pytest.fixture(scope="session")
def unit_disk():
    return build_disk(1.0)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
