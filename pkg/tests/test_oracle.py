from __future__ import annotations

import pytest

from ljexact import oracle
from ljexact.errors import ConfigurationError, NoSignChangeError
from ljexact.oracle import (
    GridResolutionWarning,
    OracleConfig,
    oracle_energy,
    oracle_energy_details,
    oracle_wavefunction_compare,
)


def test_oracle_ground_state_energy(ground_eps):
    details = oracle_energy_details(40, 0, (-12.5, -11.5))
    assert abs(details.eps - float(ground_eps)) < 1e-10
    # extrapolation improves on the finer grid
    assert abs(details.eps - float(ground_eps)) < abs(details.eps_half - float(ground_eps))
    assert details.error < 1e-8


def test_oracle_excited_partial_wave():
    assert abs(oracle_energy(40, 2, (-8, -7)) + 7.629685) < 5e-6


def test_oracle_rejects_empty_brackets():
    with pytest.raises(NoSignChangeError):
        oracle_energy(40, 0, (-11, -10))
    with pytest.raises(ValueError):
        oracle_energy(40, 0, (-1, 1))


def test_oracle_config_validation():
    with pytest.raises(ValueError):
        OracleConfig(points=50)
    with pytest.raises(ValueError):
        OracleConfig(z_min=2, z_max=1)
    with pytest.raises(ValueError):
        OracleConfig(match_z=50).domain(40, -10)


def test_grid_too_coarse_for_the_inner_wall_is_rejected():
    with pytest.raises(ConfigurationError):
        oracle_energy(40, 0, (-12.5, -11.5), OracleConfig(points=301))


def test_step_halving_shift_above_tolerance_warns(monkeypatch):
    # a 501-point grid moves the energy by ~3e-7 on halving
    monkeypatch.setattr(oracle, "RESOLUTION_TOL", 1e-8)
    with pytest.warns(GridResolutionWarning):
        oracle.oracle_energy(40, 0, (-12.5, -11.5), OracleConfig(points=501))


def test_oracle_wavefunction_matches_the_series_state(ground_state):
    report = oracle_wavefunction_compare(ground_state)
    assert report.max_deviation < 1e-8
    assert abs(report.norm_state - 1) < 1e-6
    assert abs(report.norm_oracle - 1) < 1e-6
