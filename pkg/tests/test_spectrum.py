from __future__ import annotations

import pytest
from mpmath import mp, mpf

from ljexact.errors import NoSignChangeError
from ljexact.floquet import FloquetPair, floquet_terms
from ljexact.numerics import make_problem
from ljexact.spectrum import (
    assemble_state,
    coverage_gaps,
    find_bound_states,
    locate_energies,
    overlap_deviation,
    quantization_point,
    quantization_value,
    refine_root,
    representation_values,
    rescale_to_c0,
    wavefunction,
    wavefunction_tagged,
)

TABLE_1 = {
    "T13": mp.mpc("-0.10275762e3", "-0.20083284e3"),
    "T14": mp.mpc("-0.12151177e-1", "0.62172400e-2"),
    "T15": mp.mpc("-0.13871649e4", "-0.26958725e4"),
    "T16": mp.mpc("0.49335027e-3", "-0.25242634e-3"),
    "A1": mp.mpc("-0.10095465e-2", "0.19730906e-2"),
}


def test_refine_root_on_a_smooth_function():
    with mp.workprec(113):
        root = refine_root(lambda x: x * x - 2, 1, 2)
        assert abs(root - mp.sqrt(2)) < mpf(10) ** -25
        with pytest.raises(NoSignChangeError):
            refine_root(lambda x: x * x + 1, 0, 1)


def test_locate_energies_validates_its_bracket():
    with pytest.raises(ValueError):
        locate_energies(40, 0, -1, -2)
    with pytest.raises(ValueError):
        find_bound_states(40, 0, -14, -1, grid_points=10)


def test_quantization_value_changes_sign_at_the_ground_state(ground_eps):
    with mp.workprec(113):
        eps = ground_eps
        below = quantization_value(40, 0, eps - mpf("1e-6"))
        above = quantization_value(40, 0, eps + mpf("1e-6"))
    assert (below > 0) != (above > 0)


def test_quantization_value_is_real_and_scale_free(ground_point):
    # a rescaled Floquet pair must not move the value
    pair = ground_point.pair
    with mp.workprec(113):
        scaled = FloquetPair(pair.w1.scaled(mp.mpc(2, 1)), pair.w2.scaled(mp.mpc(2, -1)), True)
    p = quantization_point(ground_point.spec, scaled)
    assert abs(p.value - ground_point.value) <= 1e-20 * max(1, abs(ground_point.value))


def test_locate_energies_finds_the_ground_state(ground_eps):
    roots = locate_energies(40, 0, -12.5, -11.5, grid_points=4)
    assert len(roots) == 1
    assert abs(roots[0] - ground_eps) < 1e-12


def test_ground_state_residuals(ground_state):
    assert ground_state.quantization_residual < 1e-8
    assert max(ground_state.decay_residuals()) < 1e-8


def test_ground_state_shape(ground_state):
    assert ground_state.index == 0
    r = ground_state.regions
    assert r.inner < 1 < r.outer
    assert wavefunction(ground_state, 1.2) > 0
    assert abs(wavefunction(ground_state, 0.3)) < 1e-10
    assert abs(wavefunction(ground_state, 25)) < 1e-10


def test_ground_state_is_normalized(ground_state):
    with mp.workprec(80):
        total = mp.quad(lambda z: wavefunction(ground_state, z) ** 2, [mpf("0.4"), 1, 2, 5, 40])
    assert abs(total - 1) < 1e-10


def test_wavefunction_is_real_inside_the_laurent_region(ground_state):
    r = ground_state.regions
    with mp.workprec(ground_state.pair.w1.prec):
        for k in range(1, 10):
            z = r.inner + (r.outer - r.inner) * k / 10
            v1, _ = floquet_terms(ground_state.pair.w1, z)
            v2, _ = floquet_terms(ground_state.pair.w2, z)
            v = ground_state.a1 * v1 + ground_state.a2 * v2
            assert abs(mp.im(v)) <= 1e-8 * abs(v)


@pytest.mark.parametrize("tags", [("inner", "middle"), ("middle", "outer")])
def test_representations_agree_where_both_are_certified(ground_state, tags):
    edge = ground_state.regions.inner if tags[0] == "inner" else ground_state.regions.outer
    zs = [edge * (1 + mpf(k) / 400) for k in range(-40, 41)]
    both = [z for z in zs if all(representation_values(ground_state, z)[t][1] <= 1e-10 for t in tags)]
    assert len(both) >= 3
    assert overlap_deviation(ground_state, both, tags) < 1e-8


def test_representations_cover_the_whole_axis(ground_state):
    zs = [mpf(k) / 20 for k in range(4, 400)]
    assert coverage_gaps(ground_state, zs, 1e-8, ("inner", "middle", "outer")) == []


def test_wavefunction_tags(ground_state):
    r = ground_state.regions
    assert wavefunction_tagged(ground_state, r.inner / 2)[1] == "inner"
    assert wavefunction_tagged(ground_state, (r.inner + r.outer) / 2)[1] == "middle"
    assert wavefunction_tagged(ground_state, 2 * r.outer)[1] == "outer"
    with pytest.raises(ValueError):
        wavefunction(ground_state, 0)


def test_representation_values_reports_all_tags(ground_state):
    assert set(representation_values(ground_state, 2)) == {"inner", "middle", "outer"}


def test_c0_convention_reproduces_the_published_entries(ground_state):
    got = rescale_to_c0(ground_state)
    with mp.workprec(113):
        for key, want in TABLE_1.items():
            assert abs(got[key] / want - 1) < 1e-6, key


def test_excited_state_has_one_node():
    roots = locate_energies(100, 0, -5.4, -5.0, grid_points=3)
    assert len(roots) == 1
    assert abs(roots[0] + mpf("5.2082334")) < 1e-6
    state = assemble_state(quantization_point(make_problem(100, 0, roots[0])))
    assert state.index == 1
    assert max(state.decay_residuals()) < 1e-8
