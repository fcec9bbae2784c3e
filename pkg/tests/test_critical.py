from __future__ import annotations

import pytest
from mpmath import mp, mpf

from ljexact.critical import (
    critical_intensities,
    frobenius_solution,
    growth_coefficient,
    growth_data,
)
from ljexact.errors import DomainError
from ljexact.floquet import evaluate_floquet, floquet_wronskian


def test_growth_coefficient_changes_sign_across_the_first_threshold():
    assert growth_coefficient(5, 0) > 0
    assert growth_coefficient(10, 0) < 0


def test_lattice_and_integration_routes_agree():
    a = growth_data(20, 1)
    b = growth_data(20, 1, method="integrate")
    with mp.workprec(113):
        assert abs(a.value - b.value) < 1e-10
        assert a.spread < 1e-10


def test_integration_route_is_independent_of_the_fit_point():
    a = growth_coefficient(20, 1, method="integrate", zf=20)
    b = growth_coefficient(20, 1, method="integrate", zf=30)
    assert abs(a - b) < 1e-10


@pytest.mark.parametrize("l", [0, 2])
def test_frobenius_pair_exponents_and_wronskian(l):
    with mp.workprec(113):
        fg = frobenius_solution(40, l, "grow", 400, 113)
        fd = frobenius_solution(40, l, "decay", 400, 113)
        z = mpf(60)
        assert abs(mp.re(evaluate_floquet(fg, z)) / z ** (l + 1) - 1) < 1e-3
        assert abs(mp.re(evaluate_floquet(fd, z)) * z ** l - 1) < 1e-3
        for zz in (mpf(2), mpf(10)):
            assert abs(floquet_wronskian(fd, fg, zz) - (2 * l + 1)) < 1e-20


def test_first_critical_intensity_for_l3():
    (result,) = critical_intensities(3, 1)
    assert result.index == 1
    assert abs(result.lambda_crit - mpf("31.60949")) < 1e-4
    assert abs(result.growth_residual) < 1e-6


def test_critical_arguments():
    assert critical_intensities(0, 0) == []
    with pytest.raises(DomainError):
        critical_intensities(-1, 1)
    with pytest.raises(ValueError):
        frobenius_solution(40, 0, "sideways", 100, 113)
    with pytest.raises(ValueError):
        growth_data(40, 0, method="guess")
