import pytest

from tdmass import fock_oracle as fo


@pytest.fixture(scope="session")
def fourier_convention():
    """F|alpha> = |sign * i alpha>, measured once on the number basis and shared."""
    return fo.fourier_convention(64)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
