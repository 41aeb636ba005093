import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from acamsim.comparator import (
    ComparatorParams,
    boundary_program_mode,
    boundary_program_numeric,
    boundary_search_mode,
    boundary_search_numeric,
    solve_program_branch,
    solve_search_branch,
    vdls_from_vdlp,
)
from acamsim.devices import TransistorParams, transistor_current
from acamsim.errors import InputError, OutOfRangeError

CP = ComparatorParams()
G_OFF, G_ON = 2e-6, 200e-6


def test_search_cutoff_pulls_node_to_rail():
    sol = solve_search_branch(CP, 100e-6, 0.0)
    assert sol.v_mid == pytest.approx(CP.v_read)
    assert sol.v_out == pytest.approx(0.0)


def test_open_memristor_grounds_node():
    assert solve_search_branch(CP, 0.0, 0.55).v_mid == pytest.approx(0.0)


def test_search_node_at_half_rail_on_boundary():
    sol = solve_search_branch(CP, 100e-6, 0.5)
    assert sol.v_mid == pytest.approx(0.3, abs=1e-6)
    assert abs(sol.residual) <= 1e-12


def test_search_input_outside_rail_rejected():
    with pytest.raises(InputError):
        solve_search_branch(CP, 100e-6, 0.7)


def test_boundary_search_closed_form():
    assert boundary_search_mode(CP, 0.0) == pytest.approx(0.45)
    assert boundary_search_mode(CP, 100e-6) == pytest.approx(0.5)


def test_boundary_search_out_of_range():
    with pytest.raises(OutOfRangeError):
        boundary_search_mode(CP, 1e-3)


def test_boundary_search_dense_grid_oracle():
    # independent oracle: scan v_dl on a fine grid for the half-rail crossing
    g = 100e-6
    grid = np.linspace(0.46, 0.6, 14001)
    v_mid = np.array([solve_search_branch(CP, g, float(v)).v_mid for v in grid])
    crossing = grid[np.argmax(v_mid <= 0.3)]
    assert crossing == pytest.approx(boundary_search_mode(CP, g), abs=2e-5)


@pytest.mark.parametrize("g", np.linspace(G_OFF, G_ON, 7))
def test_boundary_search_numeric_matches_closed_form(g):
    assert boundary_search_numeric(CP, g) == pytest.approx(boundary_search_mode(CP, g), abs=2e-3)


def test_boundary_program_closed_form():
    assert boundary_program_mode(CP, 0.0) == pytest.approx(CP.transistor.v_t)
    assert boundary_program_mode(CP, 100e-6) == pytest.approx(0.3 + math.sqrt(1.2 * 0.05), rel=1e-12)


def test_boundary_program_alpha_limit():
    cp = ComparatorParams(v_dth=1.8 - 1e-9)
    assert boundary_program_mode(cp, 150e-6) == pytest.approx(cp.transistor.v_t, abs=1e-4)


def test_boundary_program_above_vset_rejected():
    with pytest.raises(OutOfRangeError):
        boundary_program_mode(CP, 10.0)


@pytest.mark.parametrize("g", np.linspace(G_OFF, G_ON, 7))
def test_boundary_program_numeric_matches_closed_form(g):
    assert boundary_program_numeric(CP, g) == pytest.approx(boundary_program_mode(CP, g), abs=2e-3)


def test_velocity_saturated_program_boundary_numeric():
    cp = ComparatorParams(transistor=TransistorParams(law="velocity_saturated", v_c=0.1))
    for g in (10e-6, 100e-6, 190e-6):
        assert boundary_program_numeric(cp, g) == pytest.approx(boundary_program_mode(cp, g), abs=1e-6)


def test_vdls_from_vdlp_examples():
    assert vdls_from_vdlp(CP, CP.transistor.v_t) == pytest.approx(0.45)
    v = boundary_program_mode(CP, 100e-6)
    assert vdls_from_vdlp(CP, v) == pytest.approx(0.5, abs=1e-12)


def test_vdls_from_vdlp_precondition():
    with pytest.raises(InputError):
        vdls_from_vdlp(CP, 0.1)


@given(st.floats(G_OFF, G_ON))
def test_round_trip_over_range(g):
    v = vdls_from_vdlp(CP, boundary_program_mode(CP, g))
    assert abs(v - boundary_search_mode(CP, g)) <= 2e-3


@given(g=st.floats(1e-7, 1e-3), v_dl=st.floats(0, 1.8))
def test_program_branch_kcl(g, v_dl):
    sol = solve_program_branch(CP, g, v_dl)
    i_t = transistor_current(CP.transistor, v_dl, sol.v_mid)
    assert abs(i_t - g * (CP.v_set - sol.v_mid)) <= 1e-9
    assert 0.0 <= sol.v_mid <= CP.v_set


def test_search_node_monotone_in_input():
    grid = np.linspace(0.46, 0.6, 50)
    v_mid = [solve_search_branch(CP, 80e-6, float(v)).v_mid for v in grid]
    assert np.all(np.diff(v_mid) <= 1e-12)


def test_program_boundary_concave_in_g():
    g = np.linspace(G_OFF, G_ON, 30)
    v = np.array([boundary_program_mode(CP, x) for x in g])
    assert np.all(np.diff(v) > 0)
    assert np.all(np.diff(v, 2) < 0)
