from __future__ import annotations

import pytest
from mpmath import mp, mpf

from ljexact.floquet import (
    circuit_matrix,
    floquet_pair,
    floquet_wronskian,
    initial_indices,
    recurrence_residual,
)
from ljexact.numerics import make_problem


def _mod1_distance(x):
    return abs(x - mp.nint(x))


def test_circuit_matrix_is_unimodular(ground_spec):
    C = circuit_matrix(ground_spec)
    with mp.workprec(113):
        assert abs(C.det - 1) < 1e-8


def test_initial_indices_match_the_refined_ones(ground_spec, ground_point):
    nu0 = initial_indices(circuit_matrix(ground_spec))[0]
    nus = (ground_point.pair.w1.nu, ground_point.pair.w2.nu)
    with mp.workprec(113):
        assert min(_mod1_distance(mp.re(nu0 - nu)) + abs(mp.im(nu0 - nu)) for nu in nus) < 1e-8


def test_conjugate_indices_sum_to_an_integer(ground_point):
    pair = ground_point.pair
    assert pair.conjugate_pair
    with mp.workprec(113):
        s = pair.w1.nu + pair.w2.nu
        assert _mod1_distance(mp.re(s)) < 1e-10
        assert abs(mp.im(s)) < 1e-10


def test_ground_state_index(ground_point):
    nu = ground_point.pair.w1.nu
    assert abs(mp.re(nu) - mpf("0.5")) < 1e-7
    assert abs(abs(mp.im(nu)) - mpf("3.31231657")) < 1e-7


def test_laurent_recurrence_residuals(ground_spec, ground_point):
    for w in (ground_point.pair.w1, ground_point.pair.w2):
        assert recurrence_residual(ground_spec, w) < 1e-10


def test_coefficients_are_normalized(ground_point):
    w = ground_point.pair.w1
    with mp.workprec(w.prec):
        assert abs(mp.fsum(abs(c) ** 2 for c in w.coeffs) - 1) < 1e-20


def test_floquet_wronskian_is_constant_in_z(ground_point):
    pair = ground_point.pair
    with mp.workprec(113):
        ref = floquet_wronskian(pair.w1, pair.w2, 1)
        assert abs(ref) > 0
        for z in ("0.7", "1.5", "2.5", "3.2"):
            assert abs(floquet_wronskian(pair.w1, pair.w2, mpf(z)) / ref - 1) < 1e-8


@pytest.fixture(scope="module")
def real_pair():
    spec = make_problem(40, 4, -1)
    return spec, floquet_pair(spec)


def test_real_index_pair(real_pair):
    spec, pair = real_pair
    assert not pair.conjugate_pair
    with mp.workprec(113):
        for w in (pair.w1, pair.w2):
            assert abs(mp.im(w.nu)) < 1e-20
            assert recurrence_residual(spec, w) < 1e-10
        assert _mod1_distance(mp.re(pair.w1.nu + pair.w2.nu)) < 1e-10
        ref = floquet_wronskian(pair.w1, pair.w2, 1)
        assert abs(floquet_wronskian(pair.w1, pair.w2, mpf(2)) / ref - 1) < 1e-8
