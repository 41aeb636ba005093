import numpy as np
import pytest

from acamsim.comparator import ComparatorParams, boundary_program_mode
from acamsim.controller import (
    IDLE,
    RESET_COMPLETE,
    RESETTING,
    SETTING,
    STOP,
    STOPPED,
    TIMED_OUT,
    ControllerConfig,
    periphery_from_ctrl,
    run_reset,
    run_set,
)
from acamsim.devices import MemristorParams, MemristorState
from acamsim.errors import InputError, InvalidControlError

CP = ComparatorParams()
MP = MemristorParams()
CFG = ControllerConfig(comparator=CP)


def fresh(w=0.0):
    return MemristorState(w, MP)


def test_periphery_setting():
    p = periphery_from_ctrl(True, False)
    assert p.mode == SETTING
    assert p.v_sl_oe > p.v_sl_ae


def test_periphery_resetting():
    p = periphery_from_ctrl(False, True)
    assert p.mode == RESETTING
    assert p.v_sl_ae > p.v_sl_oe


def test_periphery_idle():
    assert periphery_from_ctrl(False, False).mode == IDLE


def test_periphery_contention():
    with pytest.raises(InvalidControlError):
        periphery_from_ctrl(True, True)


@pytest.mark.parametrize("g_target", [20e-6, 60e-6, 100e-6, 150e-6, 180e-6])
def test_set_reaches_target(g_target):
    res = run_set(fresh(), boundary_program_mode(CP, g_target), CFG)
    assert res.outcome == STOPPED
    assert res.final_g == pytest.approx(g_target, rel=0.02)
    assert 0 < res.stop_time < CFG.t_max


def test_no_drive_times_out_unchanged():
    res = run_set(fresh(0.1), CP.transistor.v_t, CFG)
    assert res.outcome == TIMED_OUT
    assert res.no_drive
    assert res.final_g == fresh(0.1).g
    assert res.stop_time is None


def test_overdrive_times_out_at_g_on():
    res = run_set(fresh(), 1.0, CFG)
    assert res.outcome == TIMED_OUT
    assert res.final_g == pytest.approx(MP.g_on)


def test_set_rejects_bad_vdlp():
    with pytest.raises(InputError):
        run_set(fresh(), 2.5, CFG)


def test_conductance_frozen_after_stop():
    res = run_set(fresh(), boundary_program_mode(CP, 80e-6), CFG)
    stop_phase = dict(res.phases)[STOP]
    after = res.trace.t >= stop_phase
    assert after.any()
    assert np.all(res.trace.g_mem[after] == res.final_g)
    assert all(m == RESETTING for m, a in zip(res.trace.mode, after) if a)


def test_trace_invariants():
    res = run_set(fresh(), boundary_program_mode(CP, 80e-6), CFG)
    tr = res.trace
    assert np.all(np.diff(tr.t) > 0)
    assert np.all(np.diff(tr.g_mem) >= 0)
    assert np.all((tr.v_out >= 0) & (tr.v_out <= CP.v_set))
    setting = np.array([m == SETTING for m in tr.mode])
    # output stays above the stop level until the event
    assert np.all(tr.v_out[setting][:-1] > CP.stop_level)


def test_dt_convergence():
    v = boundary_program_mode(CP, 100e-6)
    a = run_set(fresh(), v, CFG).final_g
    b = run_set(fresh(), v, ControllerConfig(comparator=CP, dt=5e-9)).final_g
    assert abs(a - b) / b < 0.005


def test_deterministic():
    v = boundary_program_mode(CP, 70e-6)
    a, b = run_set(fresh(), v, CFG), run_set(fresh(), v, CFG)
    assert a.final_g == b.final_g
    assert np.array_equal(a.trace.v_out, b.trace.v_out)


def test_initial_condition_independence_after_reset():
    v = boundary_program_mode(CP, 120e-6)
    finals = []
    for w in (0.0, 0.4, 1.0):
        cleared = run_reset(fresh(w), CFG).final_state
        finals.append(run_set(cleared, v, CFG).final_g)
    assert max(finals) == pytest.approx(min(finals), rel=0.02)


def test_stop_latency_overshoots():
    v = boundary_program_mode(CP, 100e-6)
    base = run_set(fresh(), v, CFG).final_g
    late = run_set(fresh(), v, ControllerConfig(comparator=CP, stop_latency=0.5e-6)).final_g
    assert late > base


def test_reset_from_g_on():
    res = run_reset(fresh(1.0), CFG)
    assert res.outcome == RESET_COMPLETE
    assert res.final_g == MP.g_off
    assert res.stop_time < CFG.t_max


def test_reset_idempotent_at_g_off():
    res = run_reset(fresh(0.0), CFG)
    assert res.outcome == RESET_COMPLETE
    assert res.final_g == MP.g_off
    assert res.stop_time == 0.0


def test_reset_times_out_with_short_budget():
    res = run_reset(fresh(1.0), ControllerConfig(comparator=CP, t_max=1e-6))
    assert res.outcome == TIMED_OUT
    assert MP.g_off < res.final_g < MP.g_on
