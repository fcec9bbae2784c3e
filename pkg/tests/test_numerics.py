from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp, mpf

from ljexact.banded import solve_banded
from ljexact.errors import ConfigurationError, DomainError, SingularSystemError
from ljexact.numerics import SolverConfig, exponent_coefficients, make_problem, to_mpf


def test_make_problem_accepts_zero_energy_and_rejects_bad_domains():
    assert make_problem(7, 0, 0).eps == 0
    with pytest.raises(DomainError):
        make_problem(0, 0, -1)
    with pytest.raises(DomainError):
        make_problem(40, -1, -1)
    with pytest.raises(DomainError):
        make_problem(40, 1.5, -1)
    with pytest.raises(DomainError):
        make_problem(40, 0, 0.5)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        SolverConfig(M=10)
    with pytest.raises(ConfigurationError):
        SolverConfig(precision_bits=8)
    with pytest.raises(ConfigurationError):
        SolverConfig(circuit_steps=4)
    assert make_problem(40, 0, -1, M=400).M == 400


def test_to_mpf_reads_floats_as_decimals():
    with mp.workprec(113):
        assert to_mpf(0.1) == mpf("0.1")
        assert to_mpf(0.1) != mpf(0.1)
        assert to_mpf(np.float64(0.1)) == mpf("0.1")


def test_exponents_are_exact_negatives_regardless_of_ambient_precision():
    spec = make_problem(40, 0, "-11.9091829279528781055010855616")
    with mp.workprec(53):
        ex = exponent_coefficients(spec)
    with mp.workprec(113):
        assert ex.alpha3 == -ex.alpha4
        assert ex.beta5 == -ex.beta6
        assert abs(ex.alpha4 ** 2 + spec.eps) < mpf(2) ** -100
        assert abs(ex.beta6 ** 2 - 40) < mpf(2) ** -100


@settings(max_examples=25, deadline=None)
@given(
    n=st.integers(min_value=3, max_value=12),
    seed=st.integers(min_value=0, max_value=10**6),
)
def test_banded_solver_matches_dense_solve(n, seed):
    rng = np.random.default_rng(seed)
    dense = np.zeros((n, n))
    for i in range(n):
        for j in range(max(0, i - 1), min(n, i + 4)):
            dense[i, j] = rng.normal()
        dense[i, i] += 4.0
    rhs = rng.normal(size=n)
    rows = [{j: mpf(dense[i, j]) for j in range(n) if dense[i, j] != 0} for i in range(n)]
    x = solve_banded(rows, [mpf(v) for v in rhs], kl=1)
    np.testing.assert_allclose([float(v) for v in x], np.linalg.solve(dense, rhs), rtol=1e-10, atol=1e-12)


def test_banded_solver_reports_singular_matrix():
    rows = [{0: mpf(0), 1: mpf(1)}, {1: mpf(0)}]
    with pytest.raises(SingularSystemError):
        solve_banded(rows, [mpf(1), mpf(1)], kl=1)
