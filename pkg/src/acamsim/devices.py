"""Behavioral device models: threshold memristor, long-channel NMOS, ideal inverter.

All quantities are SI (volts, amperes, siemens, seconds).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .errors import InputError

QUADRATIC = "quadratic"
VELOCITY_SATURATED = "velocity_saturated"
TRANSISTOR_LAWS = (QUADRATIC, VELOCITY_SATURATED)


@dataclass(frozen=True)
class MemristorParams:
    g_on: float = 200e-6
    g_off: float = 2e-6
    v_th_set: float = 0.45
    v_th_reset: float = -0.9
    k_set: float = 1e5
    k_reset: float = 1e5

    def __post_init__(self):
        if not (self.g_on > self.g_off > 0):
            raise InputError(f"need g_on > g_off > 0, got g_on={self.g_on}, g_off={self.g_off}")
        if not (self.v_th_set > 0 and self.v_th_reset < 0):
            raise InputError("need v_th_set > 0 and v_th_reset < 0")
        if not (self.k_set > 0 and self.k_reset > 0):
            raise InputError("rate constants must be positive")

    @property
    def g_span(self) -> float:
        return self.g_on - self.g_off


@dataclass(frozen=True)
class MemristorState:
    w: float = 0.0
    params: MemristorParams = field(default_factory=MemristorParams)

    def __post_init__(self):
        if not (0.0 <= self.w <= 1.0):
            raise InputError(f"state w={self.w} outside [0, 1]")

    @property
    def g(self) -> float:
        return conductance(self)

    @classmethod
    def from_conductance(cls, g: float, params: MemristorParams | None = None) -> "MemristorState":
        params = params or MemristorParams()
        if not (params.g_off <= g <= params.g_on):
            raise InputError(f"conductance {g} outside [{params.g_off}, {params.g_on}]")
        return cls((g - params.g_off) / params.g_span, params)


def conductance(state: MemristorState) -> float:
    p = state.params
    return p.g_off + state.w * p.g_span


def drift_rate(params: MemristorParams, v: float) -> float:
    """dw/dt for a device voltage ``v`` measured OE to AE."""
    if v > params.v_th_set:
        return params.k_set * (v - params.v_th_set)
    if v < params.v_th_reset:
        return params.k_reset * (v - params.v_th_reset)
    return 0.0


def advance_w(w: float, params: MemristorParams, v: float, dt: float) -> float:
    """One explicit Euler step of the state variable, clamped to [0, 1]."""
    rate = drift_rate(params, v)
    if rate == 0.0:
        return w
    w = w + rate * dt
    if w > 1.0:
        return 1.0
    if w < 0.0:
        return 0.0
    return w


def memristor_step(state: MemristorState, v_applied: float, dt: float) -> MemristorState:
    if not (math.isfinite(v_applied) and math.isfinite(dt)):
        raise InputError("non-finite voltage or time step")
    if dt <= 0:
        raise InputError(f"dt must be positive, got {dt}")
    w = advance_w(state.w, state.params, v_applied, dt)
    if w == state.w:
        return state
    return replace(state, w=w)


@dataclass(frozen=True)
class TransistorParams:
    """NMOS constants. ``v_c`` only matters for the velocity-saturated law."""

    k_prime: float = 500e-6
    w_over_l: float = 4.0
    v_t: float = 0.3
    law: str = QUADRATIC
    v_c: float = 0.1

    def __post_init__(self):
        if not (self.k_prime > 0 and self.w_over_l > 0 and self.v_t >= 0):
            raise InputError("need k_prime > 0, w_over_l > 0, v_t >= 0")
        if self.law not in TRANSISTOR_LAWS:
            raise InputError(f"unknown transistor law {self.law!r}; expected one of {TRANSISTOR_LAWS}")
        if self.v_c <= 0:
            raise InputError("v_c must be positive")

    @property
    def beta(self) -> float:
        """K'·W/L in A/V²."""
        return self.k_prime * self.w_over_l


def transistor_current(params: TransistorParams, v_gs: float, v_ds: float) -> float:
    """Drain current of a source-grounded NMOS.

    Cutoff below threshold, triode below the saturation voltage, flat above it.
    Under the quadratic law the saturation voltage is the overdrive; the
    velocity-saturated law caps it at ``v_c``, which makes the saturated
    current linear in the overdrive.
    """
    if not (math.isfinite(v_gs) and math.isfinite(v_ds)):
        raise InputError("non-finite terminal voltage")
    if v_ds < 0:
        raise InputError(f"v_ds must be >= 0 for this orientation, got {v_ds}")
    v_ov = v_gs - params.v_t
    if v_ov <= 0:
        return 0.0
    v_dsat = v_ov if params.law == QUADRATIC else min(v_ov, params.v_c)
    v = v_ds if v_ds < v_dsat else v_dsat
    return params.beta * (v_ov * v - 0.5 * v * v)


def saturation_current(params: TransistorParams, v_gs: float) -> float:
    v_ov = v_gs - params.v_t
    if v_ov <= 0:
        return 0.0
    v_dsat = v_ov if params.law == QUADRATIC else min(v_ov, params.v_c)
    return params.beta * (v_ov * v_dsat - 0.5 * v_dsat * v_dsat)


def inverter_out(vdd: float, v_in: float) -> float:
    if not (0.0 <= v_in <= vdd):
        raise InputError(f"inverter input {v_in} outside [0, {vdd}]")
    return vdd - v_in
