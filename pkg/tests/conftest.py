import pytest

from moscap import DeviceStack

CAL_AREA_P = 4.146023468057367e-3  # cm^2, 28.62 pF at 500 nm
CAL_AREA_MIM = 2.3178328263074024e-3  # cm^2, 16 pF at 500 nm

ACCEPTANCE_LINES = []


@pytest.fixture
def p16():
    return DeviceStack.mos(500, CAL_AREA_P, "p", 1e16)


@pytest.fixture
def n15_thin():
    return DeviceStack.mos(100, 1e-3, "n", 1e15)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
