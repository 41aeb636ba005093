"""Feedback-controlled programming engine: set/reset periphery and transient loop.

A set episode runs three phases. Prepare arms the periphery (zero duration).
Set drives the cell with the data-line voltage on the V_set rail and
integrates the memristor. Stop is entered when the comparator output falls
to the stop level. The positive-feedback switchover is one discrete event
after ``stop_latency``: the periphery flips to resetting with V_STOP on the
source line, which holds the device below both thresholds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .comparator import ComparatorParams, _bisect_scalar, solve_program_branch
from .devices import MemristorState, advance_w, drift_rate, transistor_current
from .errors import InputError, InvalidControlError

SETTING = "setting"
RESETTING = "resetting"
IDLE = "idle"
MODES = (IDLE, SETTING, RESETTING)

STOPPED = "stopped_on_threshold"
TIMED_OUT = "timed_out"
RESET_COMPLETE = "reset_complete"

PREPARE = "prepare"
SET = "set"
STOP = "stop"
RESET = "reset"


@dataclass(frozen=True)
class PeripheryState:
    mode: str
    v_sl_ae: float
    v_sl_oe: float


def periphery_from_ctrl(v_ctrl0: bool, v_ctrl1: bool, v_high: float = 1.8) -> PeripheryState:
    if v_ctrl0 and v_ctrl1:
        raise InvalidControlError("CTRL0 and CTRL1 both high: set and reset drivers in contention")
    if v_ctrl0:
        return PeripheryState(SETTING, v_sl_ae=0.0, v_sl_oe=v_high)
    if v_ctrl1:
        return PeripheryState(RESETTING, v_sl_ae=v_high, v_sl_oe=0.0)
    return PeripheryState(IDLE, 0.0, 0.0)


@dataclass(frozen=True)
class ControllerConfig:
    comparator: ComparatorParams = field(default_factory=ComparatorParams)
    dt: float = 10e-9
    t_max: float = 35e-6
    v_stop: float = 0.4
    stop_latency: float = 0.0
    hold_time: float = 0.2e-6
    v_reset_gate: float = 2.5

    def __post_init__(self):
        if not (self.t_max > 0 and 0 < self.dt <= self.t_max):
            raise InputError(f"need 0 < dt <= t_max, got dt={self.dt}, t_max={self.t_max}")
        if self.stop_latency < 0 or self.hold_time < 0:
            raise InputError("stop_latency and hold_time must be >= 0")
        if self.v_stop < 0:
            raise InputError("v_stop must be >= 0")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))


@dataclass
class TransientTrace:
    t: np.ndarray
    v_out: np.ndarray
    v_mid: np.ndarray
    g_mem: np.ndarray
    mode: list

    CHANNELS = ("t", "v_out", "v_mid", "g_mem", "mode")

    def __len__(self):
        return len(self.t)

    def rows(self):
        for i in range(len(self.t)):
            yield (self.t[i], self.v_out[i], self.v_mid[i], self.g_mem[i], self.mode[i])


class _Recorder:
    def __init__(self, dt: float):
        self.dt = dt
        self.v_out: list[float] = []
        self.v_mid: list[float] = []
        self.g: list[float] = []
        self.mode: list[str] = []

    def add(self, v_out, v_mid, g, mode):
        self.v_out.append(v_out)
        self.v_mid.append(v_mid)
        self.g.append(g)
        self.mode.append(mode)

    def repeat_last(self, n: int):
        if n <= 0:
            return
        self.v_out.extend([self.v_out[-1]] * n)
        self.v_mid.extend([self.v_mid[-1]] * n)
        self.g.extend([self.g[-1]] * n)
        self.mode.extend([self.mode[-1]] * n)

    @property
    def n(self):
        return len(self.g)

    def trace(self) -> TransientTrace:
        n = self.n
        return TransientTrace(
            t=np.arange(n) * self.dt,
            v_out=np.array(self.v_out),
            v_mid=np.array(self.v_mid),
            g_mem=np.array(self.g),
            mode=list(self.mode),
        )


@dataclass
class ProgramResult:
    trace: TransientTrace
    stop_time: float | None
    final_g: float
    phases: list
    outcome: str
    final_state: MemristorState
    no_drive: bool = False


def run_set(cell: MemristorState, v_dlp: float, config: ControllerConfig) -> ProgramResult:
    cp = config.comparator
    if not math.isfinite(v_dlp) or not (0.0 <= v_dlp <= cp.v_set):
        raise InputError(f"v_dlp={v_dlp} outside [0, V_set={cp.v_set}]")
    mp = cell.params
    dt = config.dt
    n_total = config.n_steps + 1
    stop_level = cp.stop_level
    no_drive = v_dlp <= cp.transistor.v_t
    latency_steps = int(math.ceil(config.stop_latency / dt - 1e-9))
    hold_steps = int(math.ceil(config.hold_time / dt - 1e-9))
    v_freeze = -config.v_stop

    rec = _Recorder(dt)
    phases = [(PREPARE, 0.0), (SET, 0.0)]
    w = cell.w
    stop_time = None
    flip_at = None
    end_at = n_total
    prev_v_out = None
    k = 0
    while k < end_at:
        g = mp.g_off + w * mp.g_span
        if flip_at is not None and k >= flip_at:
            # stop phase: output latched LOW, node pulled to V_STOP
            rec.add(0.0, config.v_stop, g, RESETTING)
            w_next = advance_w(w, mp, v_freeze, dt)
            if w_next == w:
                rec.repeat_last(end_at - k - 1)
                break
            w = w_next
            k += 1
            continue

        sol = solve_program_branch(cp, g, v_dlp)
        rec.add(sol.v_out, sol.v_mid, g, SETTING)
        # with the gate at or below V_T the branch carries no current and the
        # low output is not a programming event
        if stop_time is None and not no_drive and sol.v_out <= stop_level:
            if prev_v_out is None or prev_v_out == sol.v_out:
                stop_time = k * dt
            else:
                frac = (prev_v_out - stop_level) / (prev_v_out - sol.v_out)
                stop_time = (k - 1 + frac) * dt
            flip_at = k + 1 + latency_steps
            end_at = min(n_total, flip_at + hold_steps)
            if flip_at < n_total:
                phases.append((STOP, flip_at * dt))
        prev_v_out = sol.v_out
        v_dev = sol.v_out
        rate = drift_rate(mp, v_dev)
        if stop_time is None and (rate == 0.0 or (rate > 0 and w >= 1.0) or (rate < 0 and w <= 0.0)):
            # state is at a fixed point and the output never reaches the stop level
            rec.repeat_last(end_at - k - 1)
            break
        w = advance_w(w, mp, v_dev, dt)
        k += 1

    final = replace(cell, w=w)
    outcome = STOPPED if stop_time is not None else TIMED_OUT
    return ProgramResult(
        trace=rec.trace(),
        stop_time=stop_time,
        final_g=final.g,
        phases=phases,
        outcome=outcome,
        final_state=final,
        no_drive=no_drive,
    )


def solve_reset_branch(cell_g: float, config: ControllerConfig) -> float:
    """Node voltage in the resetting state.

    SL_AE is driven to V_set through the pass transistor (gate at the reset
    data-line level, source on the node); the OE side is grounded. The
    device sees the negative of the returned voltage.
    """
    cp = config.comparator
    t = cp.transistor
    rail, gate = cp.v_set, config.v_reset_gate

    def residual(v):
        return cell_g * v - transistor_current(t, gate - v, rail - v)

    return _bisect_scalar(residual, 0.0, rail, tol=1e-10)


def run_reset(cell: MemristorState, config: ControllerConfig) -> ProgramResult:
    mp = cell.params
    dt = config.dt
    n_total = config.n_steps + 1
    rec = _Recorder(dt)
    w = cell.w
    done = w <= 0.0
    k = 0
    while k < n_total:
        g = mp.g_off + w * mp.g_span
        v_node = solve_reset_branch(g, config)
        rec.add(0.0, v_node, g, RESETTING)
        if w <= 0.0:
            done = True
            break
        rate = drift_rate(mp, -v_node)
        if rate >= 0.0:
            rec.repeat_last(n_total - k - 1)
            break
        w = advance_w(w, mp, -v_node, dt)
        k += 1

    final = replace(cell, w=w)
    return ProgramResult(
        trace=rec.trace(),
        stop_time=(rec.n - 1) * dt if done else None,
        final_g=final.g,
        phases=[(RESET, 0.0)],
        outcome=RESET_COMPLETE if done else TIMED_OUT,
        final_state=final,
    )
