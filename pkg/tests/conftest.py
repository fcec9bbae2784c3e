from __future__ import annotations

import pytest
from mpmath import mp, mpf

from ljexact.numerics import make_problem
from ljexact.spectrum import assemble_state, quantization_point

#: ground-state energy at lambda = 40, l = 0, located by the library at 113 bits
GROUND_EPS = "-11.9091829279528781055010855616"


def ground_energy():
    with mp.workprec(113):
        return mpf(GROUND_EPS)


@pytest.fixture(scope="session")
def ground_eps():
    return ground_energy()


@pytest.fixture(scope="session")
def ground_spec():
    return make_problem(40, 0, ground_energy())


@pytest.fixture(scope="session")
def ground_point(ground_spec):
    return quantization_point(ground_spec)


@pytest.fixture(scope="session")
def ground_state(ground_point):
    return assemble_state(ground_point)


_ACCEPTANCE = {}


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion; returns the verdict."""

    def add(number: int, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'}  criterion {number}: {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return passed

    return add


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])
