import math

import pytest

from oscillax.bands import BandFunction, CosBump
from oscillax.dyson import AmplitudeW


@pytest.fixture(scope="session")
def u0():
    return BandFunction(CosBump(m=3, phase=math.pi / 4), 4.0, 6.0, 0.0)


@pytest.fixture(scope="session")
def potential():
    return BandFunction(CosBump(m=3, power=2, root=0.0, scale=20.0), -1.0, 1.0, 0.0)


@pytest.fixture(scope="session")
def amplitude_w(u0, potential):
    return AmplitudeW(potential, u0)


ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def record():
    """Store the one-line outcome of an acceptance criterion for the terminal summary."""

    def store(number: int, passed: bool, detail: str) -> None:
        ACCEPTANCE[number] = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"

    return store


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
