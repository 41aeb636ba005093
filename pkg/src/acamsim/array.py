"""4x2 analog CAM array driven by one shared programming circuit.

Each cell holds a low-bound (LB) and a high-bound (HB) memristor comparator.
A cell matches an input v when V_DLS(LB) <= v <= V_DLS(HB); a row matches
when every cell in it matches. Programming touches exactly one memristor at
a time; every other device state is left untouched.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass, field, replace

import numpy as np

from .comparator import ComparatorParams, _bisect_scalar, boundary_search_mode, solve_search_branch
from .controller import ControllerConfig, ProgramResult, run_reset, run_set
from .devices import MemristorParams, MemristorState, transistor_current
from .errors import AcamError, ContentionError, InputError
from .lut import LutTable, params_fingerprint, vdlp_for_target

LB = "LB"
HB = "HB"
SIDES = (LB, HB)

WR, RST, SW, VR, SEARCH_IDLE = "WR", "RST", "SW", "VR", "SEARCH_IDLE"

# comparator decision band around V_read/2, far below any grid step
MATCH_TOL = 1e-7


class CellDiagnosticError(AcamError):
    """A swept cell produced more than one contiguous match interval."""


@dataclass(frozen=True)
class CellAddress:
    row: int
    col: int
    side: str

    def __post_init__(self):
        if self.side not in SIDES:
            raise InputError(f"side must be LB or HB, got {self.side!r}")
        if self.row < 0 or self.col < 0:
            raise InputError("negative cell index")

    @property
    def label(self) -> str:
        return f"r{self.row}c{self.col}_{self.side}"


@dataclass(frozen=True)
class AcamCell:
    lb: MemristorState
    hb: MemristorState
    dont_care: bool = False

    def half(self, side: str) -> MemristorState:
        return self.lb if side == LB else self.hb


@dataclass(frozen=True)
class SearchWindow:
    row: int
    col: int
    lo: float | None
    hi: float | None
    dont_care: bool = False

    @property
    def empty(self) -> bool:
        return not self.dont_care and self.lo is None

    def contains(self, v: float) -> bool:
        if self.dont_care:
            return True
        return self.lo is not None and self.lo <= v <= self.hi


@dataclass
class OpRecord:
    kind: str
    addr: CellAddress
    t_start: float
    result: ProgramResult


def boundary_to_conductance(params: ComparatorParams, v_boundary: float) -> float:
    """Conductance whose search-mode boundary sits at ``v_boundary``."""
    t = params.transistor
    return t.beta * (v_boundary - 0.25 * params.v_read - t.v_t)


def verify_conductance(params: ComparatorParams, g_mem: float, v_gate: float) -> float:
    """Conductance estimate from the branch current with the gate fully on.

    Only the branch current is treated as observable; the transistor's
    drain-source drop is recovered by inverting its I-V law at that current.
    """
    t = params.transistor
    rail = params.v_read
    i_branch = _branch_current_device(params, g_mem, v_gate)
    if i_branch <= 0:
        return 0.0
    v_ds = _bisect_scalar(lambda v: transistor_current(t, v_gate, v) - i_branch, 0.0, rail, tol=1e-13)
    return i_branch / (rail - v_ds)


def _branch_current_device(params: ComparatorParams, g_mem: float, v_gate: float) -> float:
    t = params.transistor
    rail = params.v_read
    v_mid = _bisect_scalar(
        lambda v: transistor_current(t, v_gate, v) - g_mem * (rail - v), 0.0, rail, tol=1e-13
    )
    return g_mem * (rail - v_mid)


@dataclass
class ArrayState:
    rows: int = 4
    cols: int = 2
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    memristor: MemristorParams = field(default_factory=MemristorParams)
    v_verify: float = 1.9

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise InputError("array needs at least one row and one column")
        fresh = MemristorState(0.0, self.memristor)
        self.cells = [[AcamCell(fresh, fresh) for _ in range(self.cols)] for _ in range(self.rows)]
        self.mode = SEARCH_IDLE
        self.clock = 0.0
        self.history: list[OpRecord] = []
        self._circuit = threading.Lock()

    @property
    def comparator(self) -> ComparatorParams:
        return self.controller.comparator

    @property
    def fingerprint(self) -> str:
        return params_fingerprint(self.comparator, self.memristor)

    def addresses(self):
        for r in range(self.rows):
            for c in range(self.cols):
                for side in SIDES:
                    yield CellAddress(r, c, side)

    def _check(self, addr: CellAddress):
        if not (addr.row < self.rows and addr.col < self.cols):
            raise InputError(f"address {addr.label} outside {self.rows}x{self.cols} array")

    def state(self, addr: CellAddress) -> MemristorState:
        self._check(addr)
        return self.cells[addr.row][addr.col].half(addr.side)

    def conductance(self, addr: CellAddress) -> float:
        return self.state(addr).g

    def snapshot(self) -> dict:
        """Every memristor's state variable, keyed by address label."""
        return {a.label: self.state(a).w for a in self.addresses()}

    def _put(self, addr: CellAddress, state: MemristorState):
        cell = self.cells[addr.row][addr.col]
        if addr.side == LB:
            cell = replace(cell, lb=state)
        else:
            cell = replace(cell, hb=state)
        self.cells[addr.row][addr.col] = cell

    @contextmanager
    def programming_circuit(self):
        """Exclusive use of the single shared programming circuit."""
        if not self._circuit.acquire(blocking=False):
            raise ContentionError("the programming circuit is busy with another operation")
        try:
            yield
        finally:
            self._circuit.release()
            self.mode = SEARCH_IDLE

    def _log(self, kind: str, addr: CellAddress, result: ProgramResult):
        self.history.append(OpRecord(kind, addr, self.clock, result))
        self.clock += len(result.trace) * self.controller.dt

    # programming state

    def reset_cell(self, addr: CellAddress) -> ProgramResult:
        self._check(addr)
        with self.programming_circuit():
            return self._reset(addr)

    def _reset(self, addr: CellAddress) -> ProgramResult:
        self.mode = RST
        result = run_reset(self.state(addr), self.controller)
        self._put(addr, result.final_state)
        self._log("reset", addr, result)
        return result

    def write_cell(self, addr: CellAddress, g_target: float, lut: LutTable) -> ProgramResult:
        self._check(addr)
        with self.programming_circuit():
            v_dlp = vdlp_for_target(lut, g_target, fingerprint=self.fingerprint)
            self._reset(addr)
            self.mode = WR
            result = run_set(self.state(addr), v_dlp, self.controller)
            self._put(addr, result.final_state)
            self._log("set", addr, result)
            return result

    def program_word(self, row: int, windows, lut: LutTable) -> list[ProgramResult]:
        """Write one stored word: a (lo, hi) voltage window per column."""
        if len(windows) != self.cols:
            raise InputError(f"word needs {self.cols} windows, got {len(windows)}")
        results = []
        for col, (lo, hi) in enumerate(windows):
            if lo > hi:
                raise InputError(f"window ({lo}, {hi}) has lo > hi")
            for side, v in ((LB, lo), (HB, hi)):
                g = boundary_to_conductance(self.comparator, v)
                results.append(self.write_cell(CellAddress(row, col, side), g, lut))
        return results

    def set_dont_care(self, row: int, col: int, flag: bool = True):
        self._check(CellAddress(row, col, LB))
        with self.programming_circuit():
            self.cells[row][col] = replace(self.cells[row][col], dont_care=flag)

    def verify_cell(self, addr: CellAddress) -> float:
        self._check(addr)
        with self.programming_circuit():
            self.mode = VR
            return verify_conductance(self.comparator, self.conductance(addr), self.v_verify)

    # sweep / search

    def _half_passes(self, state: MemristorState, side: str, v: float) -> bool:
        half = 0.5 * self.comparator.v_read
        v_mid = solve_search_branch(self.comparator, state.g, v).v_mid
        if side == LB:
            return v_mid <= half + MATCH_TOL
        return v_mid >= half - MATCH_TOL

    def cell_matches(self, row: int, col: int, v: float) -> bool:
        cell = self.cells[row][col]
        if cell.dont_care:
            return True
        return self._half_passes(cell.lb, LB, v) and self._half_passes(cell.hb, HB, v)

    def sweep_row_windows(self, grid=None) -> list[SearchWindow]:
        cp = self.comparator
        grid = np.linspace(0.0, cp.v_read, 129) if grid is None else np.asarray(grid, dtype=float)
        if grid.min() < 0 or grid.max() > cp.v_read:
            raise InputError(f"sweep grid must lie within [0, {cp.v_read}] V")
        with self.programming_circuit():
            self.mode = SW
            windows = []
            for r in range(self.rows):
                for c in range(self.cols):
                    if self.cells[r][c].dont_care:
                        windows.append(SearchWindow(r, c, float(grid[0]), float(grid[-1]), True))
                        continue
                    hits = np.array([self.cell_matches(r, c, float(v)) for v in grid])
                    idx = np.flatnonzero(hits)
                    if len(idx) == 0:
                        windows.append(SearchWindow(r, c, None, None))
                        continue
                    if idx[-1] - idx[0] + 1 != len(idx):
                        raise CellDiagnosticError(f"cell r{r}c{c} matches on more than one interval")
                    windows.append(SearchWindow(r, c, float(grid[idx[0]]), float(grid[idx[-1]])))
            return windows

    def closed_form_windows(self) -> list[SearchWindow]:
        out = []
        for r in range(self.rows):
            for c in range(self.cols):
                cell = self.cells[r][c]
                lo = boundary_search_mode(self.comparator, cell.lb.g)
                hi = boundary_search_mode(self.comparator, cell.hb.g)
                if cell.dont_care:
                    out.append(SearchWindow(r, c, 0.0, self.comparator.v_read, True))
                elif lo <= hi:
                    out.append(SearchWindow(r, c, lo, hi))
                else:
                    out.append(SearchWindow(r, c, None, None))
        return out

    def _check_inputs(self, inputs) -> list[float]:
        inputs = [float(v) for v in inputs]
        if len(inputs) != self.cols:
            raise InputError(f"need {self.cols} column inputs, got {len(inputs)}")
        for v in inputs:
            if not (0.0 <= v <= self.comparator.v_read):
                raise InputError(f"search input {v} outside [0, {self.comparator.v_read}] V")
        return inputs

    def search(self, inputs) -> list[bool]:
        """Per-row match-line result for one input word, from the solved comparators."""
        inputs = self._check_inputs(inputs)
        if self._circuit.locked():
            raise ContentionError("cannot search while the array is being programmed")
        self.mode = SEARCH_IDLE
        return [all(self.cell_matches(r, c, v) for c, v in enumerate(inputs)) for r in range(self.rows)]

    def search_closed_form(self, inputs) -> list[bool]:
        """Per-row match from closed-form windows (independent of the branch solver)."""
        inputs = self._check_inputs(inputs)
        windows = self.closed_form_windows()
        return [
            all(windows[r * self.cols + c].contains(v) for c, v in enumerate(inputs)) for r in range(self.rows)
        ]

    # reporting

    def conductance_timeline(self, decimate: int = 10):
        """Per-memristor conductance staircase over the whole operation history.

        Returns ``(labels, t, G)`` with ``G`` shaped ``(len(t), n_memristors)``.
        """
        labels = [a.label for a in self.addresses()]
        col_of = {lab: i for i, lab in enumerate(labels)}
        # rebuild initial conductances by walking history backwards
        current = np.array([self.conductance(a) for a in self.addresses()])
        for op in reversed(self.history):
            current[col_of[op.addr.label]] = op.result.trace.g_mem[0]
        times, rows = [], []
        for op in self.history:
            tr = op.result.trace
            idx = np.arange(0, len(tr), max(1, decimate))
            if idx[-1] != len(tr) - 1:
                idx = np.append(idx, len(tr) - 1)
            j = col_of[op.addr.label]
            for i in idx:
                current[j] = tr.g_mem[i]
                times.append(op.t_start + tr.t[i])
                rows.append(current.copy())
        return labels, np.array(times), np.array(rows).reshape(len(rows), len(labels))

