"""Command-line entry point: ``acamsim <command> [options]``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .comparator import boundary_program_mode
from .config import load_config
from .controller import run_reset, run_set
from .devices import MemristorState
from .errors import AcamError


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="INI file with parameter sections")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: ./out)")
    p.add_argument("--dt", type=float, help="integration step in seconds")
    p.add_argument("--seed", type=int, help="seed for random search probes")
    p.add_argument("--paper-literal", action="store_true", help="also emit the printed-equation LUT variant")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="acamsim", description="Feedback-controlled memristor aCAM programming simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cell-sweep", help="program a fresh cell at each data-line voltage of a grid")
    _common(p)
    p.add_argument("--grid", help="'paper', 'auto' or start:end:step (volts)")

    p = sub.add_parser("build-lut", help="tabulate V_DLP -> G analytically and by simulation")
    _common(p)
    p.add_argument("--analytic-only", action="store_true")
    p.add_argument("--workers", type=int)

    p = sub.add_parser("array-demo", help="program four words into the 4x2 array and sweep the windows")
    _common(p)
    p.add_argument("--job", type=Path, help="array job file (default: built-in four-word demo)")
    p.add_argument("--no-traces", action="store_true", help="skip per-operation trace CSVs")

    p = sub.add_parser("set", help="run one set episode on a single cell")
    _common(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--v-dlp", type=float, help="programming data-line voltage")
    g.add_argument("--target", type=float, help="target conductance in siemens (uses the closed-form V_DLP)")
    p.add_argument("--initial-g", type=float, help="starting conductance (default g_off)")

    p = sub.add_parser("reset", help="run one reset episode on a single cell")
    _common(p)
    p.add_argument("--initial-g", type=float, help="starting conductance (default g_on)")

    p = sub.add_parser("search", help="program the array, then search it")
    _common(p)
    p.add_argument("--job", type=Path)
    p.add_argument("--input", type=float, nargs="+", action="append", help="one input word (a voltage per column)")
    p.add_argument("--probes", type=int, default=0, help="number of random input words")
    return parser


def _cfg(args):
    flags = {"controller.dt": args.dt, "experiment.seed": args.seed}
    if getattr(args, "grid", None):
        flags["cell_sweep.grid"] = args.grid
    if getattr(args, "workers", None):
        flags["lut.workers"] = args.workers
    return load_config(args.config, **flags)


def _cell(cfg, g):
    if g is None:
        return None
    return MemristorState.from_conductance(g, cfg.memristor)


def cmd_set(cfg, args) -> int:
    v = args.v_dlp if args.v_dlp is not None else boundary_program_mode(cfg.comparator, args.target)
    cell = _cell(cfg, args.initial_g) or MemristorState(0.0, cfg.memristor)
    res = run_set(cell, v, cfg.controller)
    args.out.mkdir(parents=True, exist_ok=True)
    ex.write_trace_csv(args.out / "set_trace.csv", res)
    print(f"v_dlp={v!r} outcome={res.outcome} final_g={res.final_g!r} stop_time={res.stop_time!r}")
    return 0


def cmd_reset(cfg, args) -> int:
    cell = _cell(cfg, args.initial_g) or MemristorState(1.0, cfg.memristor)
    res = run_reset(cell, cfg.controller)
    args.out.mkdir(parents=True, exist_ok=True)
    ex.write_trace_csv(args.out / "reset_trace.csv", res)
    print(f"outcome={res.outcome} final_g={res.final_g!r} time={res.stop_time!r}")
    return 0


def cmd_search(cfg, args) -> int:
    array = ex.make_array(cfg)
    job = ex.load_job(args.job) if args.job else ex.default_job()
    ex.program_job(array, job, ex.make_lut(cfg))
    words = [list(w) for w in (args.input or [])]
    rng = np.random.default_rng(cfg.experiment.seed)
    words += [list(rng.uniform(0.0, cfg.comparator.v_read, array.cols)) for _ in range(args.probes)]
    rows = []
    for word in words:
        matches = array.search(word)
        rows.append([*word, *(int(m) for m in matches)])
        print(" ".join(f"{v:.6f}" for v in word), "->", "".join(str(int(m)) for m in matches))
    args.out.mkdir(parents=True, exist_ok=True)
    ex.write_csv(
        args.out / "search.csv",
        [*(f"in_c{c}" for c in range(array.cols)), *(f"row{r}" for r in range(array.rows))],
        rows,
    )
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _cfg(args)
        if args.command == "cell-sweep":
            return ex.run_cell_sweep(cfg, args.out)
        if args.command == "build-lut":
            return ex.run_build_lut(cfg, args.out, args.analytic_only, args.paper_literal)
        if args.command == "array-demo":
            return ex.run_array_demo(cfg, args.out, args.job, traces=not args.no_traces)
        if args.command == "set":
            return cmd_set(cfg, args)
        if args.command == "reset":
            return cmd_reset(cfg, args)
        if args.command == "search":
            return cmd_search(cfg, args)
    except AcamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
