"""Experiment drivers behind the CLI: single-cell sweep, LUT build, array demo."""

from __future__ import annotations

import configparser
import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .array import HB, LB, ArrayState, CellAddress, SearchWindow, boundary_to_conductance
from .config import ExperimentConfig
from .controller import STOPPED, ProgramResult, run_set
from .devices import MemristorState
from .errors import InputError
from .lut import (
    ANALYTIC_CONSISTENT,
    ANALYTIC_PAPER_LITERAL,
    LutTable,
    build_lut,
    default_grid,
    g_of_vdlp,
    in_device_range,
    write_lut_csv,
)

R2_THRESHOLD = 0.98

# four non-overlapping words of length two, (lo, hi) per column, in volts
DEFAULT_WORDS = (
    ((0.455, 0.470), (0.524, 0.539)),
    ((0.478, 0.493), (0.501, 0.516)),
    ((0.501, 0.516), (0.478, 0.493)),
    ((0.524, 0.539), (0.455, 0.470)),
)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: Path, header, rows) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def write_trace_csv(path: Path, result: ProgramResult) -> None:
    write_csv(path, ("t", "v_out", "v_mid", "g_mem", "mode"), result.trace.rows())


def write_report(path: Path, cfg: ExperimentConfig, checks: dict, extra: dict | None = None) -> None:
    report = {
        "config": cfg.as_dict(),
        "overrides": cfg.overrides,
        "checks": checks,
    }
    if extra:
        report.update(extra)
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True, default=float) + "\n")


# single-cell sweep


@dataclass(frozen=True)
class FitRange:
    degree: int
    v_lo: float
    v_hi: float
    g_lo: float
    g_hi: float
    r2: float
    coverage: float
    n: int


def r_squared(x, y, degree: int) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    coef = np.polyfit(x, y, degree)
    resid = y - np.polyval(coef, x)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return 1.0 - ss_res / ss_tot


def largest_fit_range(v, g, usable, degree: int, g_span: float, threshold: float = R2_THRESHOLD):
    """Largest contiguous run of usable points (by conductance span) fitting at R² >= threshold."""
    v, g = np.asarray(v, float), np.asarray(g, float)
    best = None
    n = len(v)
    i = 0
    while i < n:
        if not usable[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and usable[j + 1]:
            j += 1
        for a in range(i, j + 1):
            for b in range(j, a + degree, -1):
                span = (g[b] - g[a]) / g_span
                if best is not None and span <= best.coverage:
                    break
                r2 = r_squared(v[a : b + 1], g[a : b + 1], degree)
                if r2 >= threshold:
                    best = FitRange(degree, v[a], v[b], g[a], g[b], r2, span, b - a + 1)
                    break
        i = j + 1
    return best


def sign_changes(values) -> int:
    d = np.sign(np.diff(np.asarray(values, float)))
    d = d[d != 0]
    return int(np.count_nonzero(d[1:] != d[:-1]))


@dataclass
class CellSweepResult:
    rows: list  # (v_dl, final_g, stop_time, outcome)
    fits: dict
    best: FitRange | None
    stop_time_sign_changes: int | None
    usable: list = field(default_factory=list)


def cell_sweep(cfg: ExperimentConfig, grid=None) -> CellSweepResult:
    grid = cfg.sweep_grid() if grid is None else np.asarray(grid, float)
    mem = cfg.memristor
    rows = []
    for v in grid:
        res = run_set(MemristorState(0.0, mem), float(v), cfg.controller)
        rows.append((float(v), res.final_g, res.stop_time, res.outcome))
    usable = [
        outcome == STOPPED and stop_time is not None and stop_time > 0 and mem.g_off < g < mem.g_on
        for _, g, stop_time, outcome in rows
    ]
    v = [r[0] for r in rows]
    g = [r[1] for r in rows]
    fits = {d: largest_fit_range(v, g, usable, d, mem.g_span) for d in (1, 2)}
    found = [f for f in fits.values() if f is not None]
    # widest coverage wins; ties go to the lower degree
    best = min(found, key=lambda f: (-round(f.coverage, 12), f.degree)) if found else None
    changes = None
    if best is not None:
        times = [r[2] for r in rows if best.v_lo <= r[0] <= best.v_hi]
        changes = sign_changes(times)
    return CellSweepResult(rows, fits, best, changes, usable)


def run_cell_sweep(cfg: ExperimentConfig, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    res = cell_sweep(cfg)
    write_csv(out / "cell_sweep.csv", ("v_dl", "final_g", "stop_time", "outcome"), res.rows)
    fits = {str(d): (None if f is None else f.__dict__) for d, f in res.fits.items()}
    checks = {"dynamic_range_found": res.best is not None}
    write_report(
        out / "cell_sweep_report.json",
        cfg,
        checks,
        {
            "fits": fits,
            "best_fit_degree": None if res.best is None else res.best.degree,
            "stop_time_sign_changes": res.stop_time_sign_changes,
        },
    )
    return 0


# LUT


@dataclass
class LutBuildResult:
    analytic: LutTable
    simulated: LutTable | None
    divergence: list  # (v_dlp, g_analytic, g_simulated, rel_err)
    max_interior_divergence: float | None


def interior_mask(g, mem, margin: float = 0.1):
    lo = mem.g_off + margin * mem.g_span
    hi = mem.g_on - margin * mem.g_span
    g = np.asarray(g, float)
    return (g >= lo) & (g <= hi)


def lut_divergence(cfg: ExperimentConfig, simulated: LutTable):
    rows = []
    for v, g_sim in simulated.entries:
        g_an = g_of_vdlp(cfg.comparator, v, ANALYTIC_CONSISTENT)
        rows.append((v, g_an, g_sim, abs(g_sim - g_an) / g_an))
    mask = interior_mask([r[2] for r in rows], cfg.memristor)
    errs = [r[3] for r, m in zip(rows, mask) if m]
    return rows, (max(errs) if errs else None)


def build_luts(cfg: ExperimentConfig, analytic_only: bool = False) -> LutBuildResult:
    grid = default_grid(cfg.comparator, cfg.memristor, cfg.lut.points)
    analytic = build_lut(cfg.comparator, cfg.memristor, grid, "analytic")
    if analytic_only:
        return LutBuildResult(analytic, None, [], None)
    simulated = build_lut(
        cfg.comparator, cfg.memristor, grid, "simulated", config=cfg.controller, workers=cfg.lut.workers
    )
    rows, worst = lut_divergence(cfg, simulated)
    return LutBuildResult(analytic, simulated, rows, worst)


def paper_literal_rows(cfg: ExperimentConfig, grid):
    rows = []
    for v in grid:
        g_lit = g_of_vdlp(cfg.comparator, float(v), ANALYTIC_PAPER_LITERAL)
        g_con = g_of_vdlp(cfg.comparator, float(v), ANALYTIC_CONSISTENT)
        rows.append((float(v), g_lit, g_con, g_lit - g_con, int(in_device_range(g_lit, cfg.memristor))))
    return rows


def run_build_lut(cfg: ExperimentConfig, out: Path, analytic_only=False, paper_literal=False) -> int:
    out.mkdir(parents=True, exist_ok=True)
    res = build_luts(cfg, analytic_only)
    write_lut_csv(res.analytic, out / "lut_analytic.csv")
    checks = {}
    extra = {"analytic_entries": len(res.analytic), "analytic_trimmed": len(res.analytic.trimmed)}
    if res.simulated is not None:
        write_lut_csv(res.simulated, out / "lut_simulated.csv")
        write_csv(
            out / "lut_divergence.csv", ("v_dlp_volts", "g_analytic", "g_simulated", "rel_err"), res.divergence
        )
        extra["simulated_entries"] = len(res.simulated)
        extra["simulated_trimmed"] = [list(t) for t in res.simulated.trimmed]
        extra["max_interior_divergence"] = res.max_interior_divergence
        checks["interior_divergence_le_2pct"] = (
            res.max_interior_divergence is not None and res.max_interior_divergence <= 0.02
        )
    if paper_literal:
        grid = default_grid(cfg.comparator, cfg.memristor, cfg.lut.points)
        rows = paper_literal_rows(cfg, grid)
        write_csv(
            out / "lut_paper_literal.csv",
            ("v_dlp_volts", "g_mem_siemens", "g_consistent_siemens", "offset_siemens", "in_range"),
            rows,
        )
        expected = -cfg.transistor.beta * 0.75 * cfg.comparator.v_read
        checks["paper_literal_constant_offset"] = all(abs(r[3] - expected) <= 1e-12 for r in rows)
    write_report(out / "lut_report.json", cfg, checks, extra)
    return 0 if all(checks.values()) else 1


# array


@dataclass
class JobEntry:
    row: int
    col: int
    side: str | None = None
    target: float | None = None
    window: tuple | None = None
    dont_care: bool = False


def default_job() -> list[JobEntry]:
    return [JobEntry(r, c, window=w) for r, word in enumerate(DEFAULT_WORDS) for c, w in enumerate(word)]


def load_job(path) -> list[JobEntry]:
    """Read an array job file: one section per cell entry, processed in file order.

    Each section has ``row`` and ``col`` plus one of: ``lo``/``hi`` (a
    window pair in volts), ``side``/``target`` (one memristor, siemens), or
    ``dont_care = true``.
    """
    parser = configparser.ConfigParser()
    if not parser.read(Path(path)):
        raise InputError(f"cannot read job file {path}")
    entries = []
    for name in parser.sections():
        s = parser[name]
        try:
            row, col = s.getint("row"), s.getint("col")
        except (TypeError, ValueError):
            raise InputError(f"[{name}] needs integer row and col") from None
        if row is None or col is None:
            raise InputError(f"[{name}] needs row and col")
        if s.getboolean("dont_care", fallback=False):
            entries.append(JobEntry(row, col, dont_care=True))
        elif "lo" in s and "hi" in s:
            entries.append(JobEntry(row, col, window=(s.getfloat("lo"), s.getfloat("hi"))))
        elif "side" in s and "target" in s:
            entries.append(JobEntry(row, col, side=s["side"].strip().upper(), target=s.getfloat("target")))
        else:
            raise InputError(f"[{name}] needs lo/hi, side/target, or dont_care")
    return entries


def make_array(cfg: ExperimentConfig) -> ArrayState:
    a = cfg.array
    return ArrayState(a.rows, a.cols, cfg.controller, cfg.memristor, a.v_verify)


def make_lut(cfg: ExperimentConfig) -> LutTable:
    grid = default_grid(cfg.comparator, cfg.memristor, cfg.lut.points)
    if cfg.array.lut == "simulated":
        return build_lut(cfg.comparator, cfg.memristor, grid, "simulated", config=cfg.controller, workers=cfg.lut.workers)
    return build_lut(cfg.comparator, cfg.memristor, grid, "analytic")


@dataclass
class ArrayDemoResult:
    array: ArrayState
    ops: list  # (label, ProgramResult, isolated)
    windows: list
    closed: list
    sweep_step: float
    checks: dict
    probes: list  # (inputs, matches)
    max_edge_error: float


def _isolated(before: dict, after: dict, label: str) -> bool:
    return all(before[k] == after[k] for k in before if k != label)


def windows_disjoint(windows: list[SearchWindow], cols: int) -> bool:
    for c in range(cols):
        spans = sorted((w.lo, w.hi) for w in windows if w.col == c and not w.dont_care and not w.empty)
        if any(spans[i][1] >= spans[i + 1][0] for i in range(len(spans) - 1)):
            return False
    return True


def program_job(array: ArrayState, job: list[JobEntry], lut: LutTable):
    ops = []
    for e in job:
        if e.dont_care:
            array.set_dont_care(e.row, e.col, True)
            continue
        if e.window is not None:
            lo, hi = e.window
            if lo > hi:
                raise InputError(f"window ({lo}, {hi}) for r{e.row}c{e.col} has lo > hi")
            writes = [
                (CellAddress(e.row, e.col, LB), boundary_to_conductance(array.comparator, lo)),
                (CellAddress(e.row, e.col, HB), boundary_to_conductance(array.comparator, hi)),
            ]
        else:
            writes = [(CellAddress(e.row, e.col, e.side), e.target)]
        for addr, g in writes:
            before = array.snapshot()
            res = array.write_cell(addr, g, lut)
            after = array.snapshot()
            ops.append((addr.label, g, res, _isolated(before, after, addr.label)))
    return ops


def array_demo(cfg: ExperimentConfig, job: list[JobEntry] | None = None) -> ArrayDemoResult:
    array = make_array(cfg)
    lut = make_lut(cfg)
    job = default_job() if job is None else job
    ops = program_job(array, job, lut)

    grid = np.linspace(0.0, cfg.comparator.v_read, cfg.array.sweep_points)
    step = float(grid[1] - grid[0])
    windows = array.sweep_row_windows(grid)
    closed = array.closed_form_windows()
    edge_err = 0.0
    consistent = True
    for w, c in zip(windows, closed):
        if w.dont_care:
            continue
        if w.empty or c.empty:
            consistent &= w.empty == c.empty or (c.hi - c.lo) < step
            continue
        edge_err = max(edge_err, abs(w.lo - c.lo), abs(w.hi - c.hi))
    consistent &= edge_err <= step

    probes = []
    one_hot = True
    for r in range(array.rows):
        row_windows = [w for w in closed if w.row == r]
        if any(w.empty for w in row_windows):
            continue
        inputs = [
            0.5 * cfg.comparator.v_read if w.dont_care else 0.5 * (w.lo + w.hi)
            for w in sorted(row_windows, key=lambda w: w.col)
        ]
        matches = array.search(inputs)
        probes.append((inputs, matches))
        one_hot &= sum(matches) == 1 and matches[r]

    rng = np.random.default_rng(cfg.experiment.seed)
    agree = True
    for _ in range(cfg.experiment.probes):
        x = rng.uniform(0.0, cfg.comparator.v_read, array.cols)
        agree &= array.search(x) == array.search_closed_form(x)

    checks = {
        "all_writes_stopped_on_threshold": all(res.outcome == STOPPED for _, _, res, _ in ops),
        "isolation": all(iso for *_, iso in ops),
        "window_consistency": bool(consistent),
        "windows_disjoint_per_column": windows_disjoint(windows, array.cols),
        "center_probes_one_hot": bool(one_hot and probes),
        "search_matches_closed_form": bool(agree),
    }
    return ArrayDemoResult(array, ops, windows, closed, step, checks, probes, edge_err)


def _window_rows(windows):
    return [(w.row, w.col, w.lo, w.hi) for w in windows]


def run_array_demo(cfg: ExperimentConfig, out: Path, job_path=None, traces: bool = True) -> int:
    out.mkdir(parents=True, exist_ok=True)
    job = load_job(job_path) if job_path else None
    res = array_demo(cfg, job)
    labels, t, g = res.array.conductance_timeline(cfg.array.decimate)
    write_csv(out / "staircase.csv", ["t", *labels], ([ti, *gi] for ti, gi in zip(t, g)))
    write_csv(out / "windows.csv", ("row", "col", "lo_volts", "hi_volts"), _window_rows(res.windows))
    write_csv(out / "windows_closed_form.csv", ("row", "col", "lo_volts", "hi_volts"), _window_rows(res.closed))
    write_csv(
        out / "search.csv",
        [*(f"in_c{c}" for c in range(res.array.cols)), *(f"row{r}" for r in range(res.array.rows))],
        ([*inputs, *(int(m) for m in matches)] for inputs, matches in res.probes),
    )
    write_csv(
        out / "operations.csv",
        ("index", "kind", "address", "t_start", "outcome", "final_g", "stop_time"),
        (
            (i, op.kind, op.addr.label, op.t_start, op.result.outcome, op.result.final_g, op.result.stop_time)
            for i, op in enumerate(res.array.history)
        ),
    )
    if traces:
        tdir = out / "traces"
        tdir.mkdir(exist_ok=True)
        for i, op in enumerate(res.array.history):
            write_trace_csv(tdir / f"op{i:03d}_{op.kind}_{op.addr.label}.csv", op.result)
    write_report(
        out / "array_report.json",
        cfg,
        res.checks,
        {"max_edge_error_volts": res.max_edge_error, "sweep_step_volts": res.sweep_step},
    )
    return 0 if all(res.checks.values()) else 1
