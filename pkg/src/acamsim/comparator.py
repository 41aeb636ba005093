"""Quasi-static solution of the transistor/memristor comparator branch.

Topology (both modes): the memristor runs from the rail (its OE terminal) to
the middle node (its AE terminal); the NMOS runs from the middle node to
ground with its gate on the data line. The comparator output is the ideal
inverter of the middle node, which equals the voltage dropped across the
memristor.

Search mode (rail V_read) uses the transistor as a gate-controlled channel
conductance equal to the triode current at the half-rail point divided by
V_read/2, so the middle node sits at V_read/2 exactly when channel and
memristor conductances are equal. ``search_law="device"`` switches to the
full piecewise I-V law instead. Program mode (rail V_set) always uses the
full law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .devices import QUADRATIC, TransistorParams, inverter_out, transistor_current
from .errors import InputError, OutOfRangeError, SolverError

I_TOL = 1e-12  # A, KCL residual bound
_MAX_ITER = 200

EQ1 = "eq1"
DEVICE = "device"


@dataclass(frozen=True)
class ComparatorParams:
    transistor: TransistorParams = field(default_factory=TransistorParams)
    v_read: float = 0.6
    v_set: float = 1.8
    v_dth: float = 1.2
    search_law: str = EQ1

    def __post_init__(self):
        if not (0 < self.v_read < self.v_set):
            raise InputError("need 0 < v_read < v_set")
        if not (0 < self.v_dth < self.v_set):
            raise InputError("need 0 < v_dth < v_set")
        if self.search_law not in (EQ1, DEVICE):
            raise InputError(f"unknown search_law {self.search_law!r}")

    @property
    def alpha(self) -> float:
        return self.v_dth / self.v_set

    @property
    def stop_level(self) -> float:
        """Comparator output at which programming stops: (1 - alpha)·V_set.

        At this level the middle node has risen to V_dth and the memristor
        carries the full saturated transistor current across V_set - V_dth.
        """
        return self.v_set - self.v_dth


@dataclass(frozen=True)
class BranchSolution:
    v_mid: float
    i_branch: float
    v_out: float
    residual: float


def bisect_branch(rail: float, g_mem: float, i_transistor: Callable[[float], float]) -> BranchSolution:
    """Find the middle-node voltage where transistor and memristor currents balance.

    The residual I_t(v) - g·(rail - v) is non-decreasing in v, negative (or
    zero) at ground and non-negative at the rail, so bisection always brackets.
    """
    lo, hi = 0.0, rail
    f_lo = i_transistor(lo) - g_mem * rail
    f_hi = i_transistor(hi)
    if f_lo == 0.0 and f_hi == 0.0:
        raise SolverError("branch is open on both sides; middle node is floating")
    if f_lo > 0 or f_hi < 0:
        raise SolverError(f"no sign change on [0, {rail}] (f_lo={f_lo:.3e}, f_hi={f_hi:.3e})")
    if f_lo == 0.0:
        return BranchSolution(lo, g_mem * rail, inverter_out(rail, lo), 0.0)
    if f_hi == 0.0:
        return BranchSolution(hi, 0.0, inverter_out(rail, hi), 0.0)
    mid, f_mid = lo, f_lo
    for _ in range(_MAX_ITER):
        mid = 0.5 * (lo + hi)
        f_mid = i_transistor(mid) - g_mem * (rail - mid)
        if abs(f_mid) <= I_TOL and hi - lo < 1e-9:
            break
        if f_mid < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    return BranchSolution(mid, g_mem * (rail - mid), inverter_out(rail, mid), f_mid)


def search_channel_conductance(params: ComparatorParams, v_dl: float) -> float:
    """Triode chord conductance of the search transistor at v_ds = V_read/2."""
    t = params.transistor
    half = 0.5 * params.v_read
    return max(0.0, t.beta * (v_dl - t.v_t - 0.5 * half))


def _check_g(g_mem: float):
    if not (math.isfinite(g_mem) and g_mem >= 0):
        raise InputError(f"conductance must be finite and >= 0, got {g_mem}")


def solve_search_branch(params: ComparatorParams, g_mem: float, v_dl: float) -> BranchSolution:
    if not (0.0 <= v_dl <= params.v_read):
        raise InputError(f"search input {v_dl} outside [0, {params.v_read}]")
    _check_g(g_mem)
    if params.search_law == EQ1:
        g_ch = search_channel_conductance(params, v_dl)

        def i_t(v):
            return g_ch * v
    else:
        t = params.transistor

        def i_t(v):
            return transistor_current(t, v_dl, v)

    return bisect_branch(params.v_read, g_mem, i_t)


def solve_program_branch(params: ComparatorParams, g_mem: float, v_dl: float) -> BranchSolution:
    """Branch with the memristor (or a fixed resistor) on the V_set rail."""
    _check_g(g_mem)
    t = params.transistor
    return bisect_branch(params.v_set, g_mem, lambda v: transistor_current(t, v_dl, v))


def _bisect_scalar(fn: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    """Root of an increasing function on [lo, hi]."""
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo > 0 or f_hi < 0:
        raise SolverError("no sign change")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if fn(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def boundary_search_mode(params: ComparatorParams, g_mem: float, paper_literal: bool = False) -> float:
    """V_DLS: data-line voltage at which the search node sits at V_read/2.

    Default is the form derived from the triode current at the half-rail
    point. ``paper_literal`` uses the printed intercept V_read + V_T instead
    of V_read/4 + V_T.
    """
    _check_g(g_mem)
    t = params.transistor
    intercept = params.v_read if paper_literal else 0.25 * params.v_read
    v = g_mem / t.beta + intercept + t.v_t
    if not paper_literal and not (0.0 <= v <= params.v_read):
        raise OutOfRangeError(f"V_DLS={v:.4f} V for g={g_mem:.3e} S is outside [0, {params.v_read}] V")
    return v


def boundary_search_numeric(params: ComparatorParams, g_mem: float) -> float:
    """V_DLS located by bisecting the solved search branch over the data line."""
    _check_g(g_mem)
    half = 0.5 * params.v_read

    def h(v_dl):
        return half - solve_search_branch(params, g_mem, v_dl).v_mid

    try:
        return _bisect_scalar(h, 0.0, params.v_read)
    except SolverError:
        raise OutOfRangeError(f"no search boundary inside [0, {params.v_read}] V for g={g_mem:.3e} S") from None


def boundary_program_mode(params: ComparatorParams, g_fixed: float) -> float:
    """V_DLP: gate voltage whose saturated current drives g_fixed to the stop level."""
    _check_g(g_fixed)
    t = params.transistor
    i_target = params.stop_level * g_fixed
    if t.law == QUADRATIC or i_target <= 0.5 * t.beta * t.v_c**2:
        v = t.v_t + math.sqrt(2.0 * i_target / t.beta)
    else:
        v = t.v_t + i_target / (t.beta * t.v_c) + 0.5 * t.v_c
    if v > params.v_set:
        raise OutOfRangeError(f"V_DLP={v:.4f} V for g={g_fixed:.3e} S exceeds V_set={params.v_set} V")
    return v


def boundary_program_numeric(params: ComparatorParams, g_fixed: float) -> float:
    """V_DLP found by sweeping the fixed-resistor program branch until v_out hits the stop level."""
    _check_g(g_fixed)

    def h(v_dl):
        return solve_program_branch(params, g_fixed, v_dl).v_out - params.stop_level

    try:
        return _bisect_scalar(h, params.transistor.v_t, params.v_set)
    except SolverError:
        raise OutOfRangeError(f"no program boundary inside [V_T, {params.v_set}] V for g={g_fixed:.3e} S") from None


def vdls_from_vdlp(params: ComparatorParams, v_dlp: float) -> float:
    t = params.transistor
    if not (t.v_t <= v_dlp <= params.v_set):
        raise InputError(f"v_dlp={v_dlp} outside [V_T={t.v_t}, V_set={params.v_set}]")
    return (v_dlp - t.v_t) ** 2 / (2.0 * params.stop_level) + 0.25 * params.v_read + t.v_t


def search_sweep(params: ComparatorParams, g_mem: float, v_dl: np.ndarray) -> np.ndarray:
    """Rows of (v_dl, v_mid, v_out) over a data-line sweep."""
    rows = np.empty((len(v_dl), 3))
    for i, v in enumerate(v_dl):
        sol = solve_search_branch(params, g_mem, float(v))
        rows[i] = (v, sol.v_mid, sol.v_out)
    return rows
