"""Lookup table between programming data-line voltage and programmed conductance."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .comparator import ComparatorParams, boundary_program_mode
from .controller import STOPPED, ControllerConfig, run_set
from .devices import MemristorParams, MemristorState
from .errors import BuildError, FingerprintError, InputError, OutOfRangeError

ANALYTIC_CONSISTENT = "analytic_consistent"
ANALYTIC_PAPER_LITERAL = "analytic_paper_literal"
SIMULATED = "simulated"
VARIANTS = (ANALYTIC_CONSISTENT, ANALYTIC_PAPER_LITERAL)

CSV_HEADER = ("v_dlp_volts", "g_mem_siemens")


def params_fingerprint(comparator: ComparatorParams, memristor: MemristorParams) -> str:
    blob = json.dumps(
        {"comparator": dataclasses.asdict(comparator), "memristor": dataclasses.asdict(memristor)},
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class LutTable:
    entries: tuple  # ((v_dlp, g_mem), ...)
    provenance: str
    params_fingerprint: str
    trimmed: tuple = field(default=(), compare=False)  # ((v_dlp, g_mem, reason), ...)

    def __post_init__(self):
        v = np.array([e[0] for e in self.entries])
        g = np.array([e[1] for e in self.entries])
        if len(self.entries) > 1 and not (np.all(np.diff(v) > 0) and np.all(np.diff(g) > 0)):
            raise InputError("LUT entries must be strictly increasing in both v_dlp and g_mem")

    @property
    def v_dlp(self) -> np.ndarray:
        return np.array([e[0] for e in self.entries])

    @property
    def g_mem(self) -> np.ndarray:
        return np.array([e[1] for e in self.entries])

    @property
    def g_range(self) -> tuple[float, float]:
        return self.entries[0][1], self.entries[-1][1]

    def __len__(self):
        return len(self.entries)


def g_of_vdlp(params: ComparatorParams, v_dlp: float, variant: str = ANALYTIC_CONSISTENT) -> float:
    """Programmed conductance predicted for a data-line voltage.

    The consistent variant inverts the program-mode boundary. The
    paper-literal variant subtracts the constant K'·(W/L)·(3/4)·V_read that
    the printed read-mode intercept introduces; it goes negative for small
    drives, which callers detect with :func:`in_device_range`.
    """
    t = params.transistor
    if not (t.v_t <= v_dlp <= params.v_set):
        raise InputError(f"v_dlp={v_dlp} outside [V_T={t.v_t}, V_set={params.v_set}]")
    if variant not in VARIANTS:
        raise InputError(f"unknown variant {variant!r}")
    g = t.beta * (v_dlp - t.v_t) ** 2 / (2.0 * params.stop_level)
    if variant == ANALYTIC_PAPER_LITERAL:
        g -= t.beta * 0.75 * params.v_read
    return g


def in_device_range(g: float, mem: MemristorParams, rel_tol: float = 1e-9) -> bool:
    # the tolerance absorbs rounding at grid endpoints computed from g_off/g_on
    slack = rel_tol * mem.g_on
    return mem.g_off - slack <= g <= mem.g_on + slack


def default_grid(params: ComparatorParams, mem: MemristorParams, n: int = 64) -> np.ndarray:
    """Uniform grid spanning the analytic programmable range [V_DLP(g_off), V_DLP(g_on)]."""
    lo = boundary_program_mode(params, mem.g_off)
    hi = boundary_program_mode(params, mem.g_on)
    return np.linspace(lo, hi, n)


def _simulate_point(args):
    v, mem, config = args
    res = run_set(MemristorState(0.0, mem), float(v), config)
    return res.outcome, res.final_g, res.stop_time


def _longest_run(usable: list[bool]) -> tuple[int, int]:
    best, start = (0, 0), None
    for i, ok in enumerate(usable + [False]):
        if ok and start is None:
            start = i
        elif not ok and start is not None:
            if i - start > best[1] - best[0]:
                best = (start, i)
            start = None
    return best


def build_lut(
    params: ComparatorParams,
    mem_params: MemristorParams,
    grid=None,
    method: str = "analytic",
    *,
    config: ControllerConfig | None = None,
    paper_literal: bool = False,
    workers: int = 1,
) -> LutTable:
    grid = default_grid(params, mem_params) if grid is None else np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise InputError("grid must be a non-empty 1-D sequence")
    if np.any(np.diff(grid) <= 0):
        raise InputError("grid must be strictly increasing")
    t = params.transistor
    if grid[0] < t.v_t or grid[-1] > params.v_set:
        raise InputError(f"grid must lie within [V_T={t.v_t}, V_set={params.v_set}]")

    if method == "analytic":
        variant = ANALYTIC_PAPER_LITERAL if paper_literal else ANALYTIC_CONSISTENT
        g = [g_of_vdlp(params, float(v), variant) for v in grid]
        reasons = [None if in_device_range(x, mem_params) else "outside [g_off, g_on]" for x in g]
        provenance = variant
    elif method == "simulated":
        if config is None:
            config = ControllerConfig(comparator=params)
        elif config.comparator != params:
            raise InputError("controller config was built for different comparator parameters")
        jobs = [(v, mem_params, config) for v in grid]
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_simulate_point, jobs))
        else:
            results = [_simulate_point(j) for j in jobs]
        g, reasons = [], []
        for outcome, final_g, stop_time in results:
            g.append(final_g)
            if outcome != STOPPED:
                reasons.append(outcome)
            elif stop_time == 0.0 or final_g <= mem_params.g_off:
                reasons.append("clipped at g_off")
            elif final_g >= mem_params.g_on:
                reasons.append("clipped at g_on")
            else:
                reasons.append(None)
        provenance = SIMULATED
    else:
        raise InputError(f"unknown method {method!r}")

    usable = [r is None for r in reasons]
    # break runs wherever monotonicity fails
    for i in range(1, len(g)):
        if usable[i] and usable[i - 1] and g[i] <= g[i - 1]:
            usable[i] = False
            reasons[i] = "non-monotone"
    a, b = _longest_run(usable)
    if b == a:
        raise BuildError("no usable LUT entries on the requested grid")
    entries = tuple((float(grid[i]), float(g[i])) for i in range(a, b))
    trimmed = tuple(
        (float(grid[i]), float(g[i]), reasons[i] or "outside longest monotone run")
        for i in range(len(grid))
        if not (a <= i < b)
    )
    return LutTable(entries, provenance, params_fingerprint(params, mem_params), trimmed)


def vdlp_for_target(table: LutTable, g_target: float, fingerprint: str | None = None) -> float:
    """Data-line voltage for a target conductance by piecewise-linear inversion."""
    if fingerprint is not None and fingerprint != table.params_fingerprint:
        raise FingerprintError(
            f"table fingerprint {table.params_fingerprint} does not match live parameters {fingerprint}"
        )
    g_min, g_max = table.g_range
    if not (g_min <= g_target <= g_max):
        raise OutOfRangeError(f"target {g_target:.4e} S outside achievable range [{g_min:.4e}, {g_max:.4e}] S")
    if len(table) == 1:
        return table.entries[0][0]
    return float(np.interp(g_target, table.g_mem, table.v_dlp))


def write_lut_csv(table: LutTable, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(f"# fingerprint={table.params_fingerprint} provenance={table.provenance}\n")
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for v, g in table.entries:
            writer.writerow((repr(v), repr(g)))


def read_lut_csv(path) -> LutTable:
    path = Path(path)
    meta = {}
    rows = []
    with path.open(newline="") as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise InputError(f"{path}: missing fingerprint comment line")
        for item in first[1:].split():
            key, _, value = item.partition("=")
            meta[key] = value
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise InputError(f"{path}: expected header {','.join(CSV_HEADER)}, got {','.join(header)}")
        for row in reader:
            if row:
                rows.append((float(row[0]), float(row[1])))
    if "fingerprint" not in meta:
        raise InputError(f"{path}: fingerprint missing from comment line")
    return LutTable(tuple(rows), meta.get("provenance", SIMULATED), meta["fingerprint"])
