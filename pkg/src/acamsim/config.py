"""INI-style experiment configuration.

Sections are named after the modules they feed::

    [memristor]   g_on, g_off, v_th_set, v_th_reset, k_set, k_reset
    [transistor]  k_prime, w_over_l, v_t, law, v_c
    [comparator]  v_read, v_set, v_dth, search_law
    [controller]  dt, t_max, v_stop, stop_latency, hold_time, v_reset_gate
    [cell_sweep]  grid = paper | auto | start:end:step
    [lut]         points, method, workers
    [array]       rows, cols, v_verify, sweep_points, lut, decimate
    [experiment]  seed, probes

Anything not given keeps its default. Every value read from a file or a
command-line flag is recorded in ``ExperimentConfig.overrides``.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .comparator import ComparatorParams, boundary_program_mode
from .controller import ControllerConfig
from .devices import MemristorParams, TransistorParams
from .errors import InputError

PAPER_SWEEP = (0.75, 1.8, 0.05)


@dataclass(frozen=True)
class CellSweepSettings:
    grid: str = "paper"


@dataclass(frozen=True)
class LutSettings:
    points: int = 64
    method: str = "simulated"
    workers: int = 1


@dataclass(frozen=True)
class ArraySettings:
    rows: int = 4
    cols: int = 2
    v_verify: float = 1.9
    sweep_points: int = 129
    lut: str = "analytic"
    decimate: int = 10


@dataclass(frozen=True)
class ExperimentSettings:
    seed: int = 0
    probes: int = 1000


@dataclass
class ExperimentConfig:
    memristor: MemristorParams = field(default_factory=MemristorParams)
    transistor: TransistorParams = field(default_factory=TransistorParams)
    comparator: ComparatorParams = field(default_factory=ComparatorParams)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    cell_sweep: CellSweepSettings = field(default_factory=CellSweepSettings)
    lut: LutSettings = field(default_factory=LutSettings)
    array: ArraySettings = field(default_factory=ArraySettings)
    experiment: ExperimentSettings = field(default_factory=ExperimentSettings)
    overrides: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            if f.name == "overrides":
                continue
            value = getattr(self, f.name)
            out[f.name] = dataclasses.asdict(value)
        # nested copies are noise in the report
        out["comparator"].pop("transistor", None)
        out["controller"].pop("comparator", None)
        return out

    def sweep_grid(self) -> np.ndarray:
        return parse_grid(self.cell_sweep.grid, self.comparator, self.memristor)


def parse_grid(spec: str, comparator: ComparatorParams, memristor: MemristorParams, auto_points: int = 35):
    spec = spec.strip()
    if spec == "paper":
        start, end, step = PAPER_SWEEP
    elif spec == "auto":
        lo = boundary_program_mode(comparator, memristor.g_off)
        hi = boundary_program_mode(comparator, memristor.g_on)
        pad = 0.05 * (hi - lo)
        return np.linspace(max(comparator.transistor.v_t, lo - pad), min(comparator.v_set, hi + pad), auto_points)
    else:
        try:
            start, end, step = (float(x) for x in spec.split(":"))
        except ValueError:
            raise InputError(f"grid must be 'paper', 'auto' or start:end:step, got {spec!r}") from None
    if step <= 0 or end < start:
        raise InputError(f"bad grid {spec!r}")
    n = int(round((end - start) / step)) + 1
    return np.linspace(start, start + (n - 1) * step, n)


def _coerce(template, raw: str):
    if isinstance(template, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(template, int):
        return int(raw)
    if isinstance(template, float):
        return float(raw)
    return raw.strip()


def _apply(obj, section: str, values: dict, overrides: dict):
    known = {f.name: f for f in dataclasses.fields(obj) if not dataclasses.is_dataclass(getattr(obj, f.name))}
    changes = {}
    for key, raw in values.items():
        if key not in known:
            raise InputError(f"unknown key {key!r} in [{section}]; expected one of {sorted(known)}")
        changes[key] = _coerce(getattr(obj, key), raw)
        overrides[f"{section}.{key}"] = changes[key]
    return replace(obj, **changes) if changes else obj


SECTIONS = ("memristor", "transistor", "comparator", "controller", "cell_sweep", "lut", "array", "experiment")


def load_config(path=None, **flags) -> ExperimentConfig:
    """Build an ExperimentConfig from an optional INI file and flag overrides.

    ``flags`` are dotted keys such as ``controller.dt``; ``None`` values are ignored.
    """
    sections: dict[str, dict] = {name: {} for name in SECTIONS}
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(Path(path))
        if not read:
            raise InputError(f"cannot read config file {path}")
        for name in parser.sections():
            if name not in sections:
                raise InputError(f"unknown section [{name}] in {path}; expected one of {SECTIONS}")
            sections[name].update(parser[name])
    for dotted, value in flags.items():
        if value is None:
            continue
        section, key = dotted.split(".", 1)
        sections[section][key] = str(value)

    cfg = ExperimentConfig()
    ov = cfg.overrides
    memristor = _apply(cfg.memristor, "memristor", sections["memristor"], ov)
    transistor = _apply(cfg.transistor, "transistor", sections["transistor"], ov)
    comparator = _apply(replace(cfg.comparator, transistor=transistor), "comparator", sections["comparator"], ov)
    controller = _apply(replace(cfg.controller, comparator=comparator), "controller", sections["controller"], ov)
    return ExperimentConfig(
        memristor=memristor,
        transistor=transistor,
        comparator=comparator,
        controller=controller,
        cell_sweep=_apply(cfg.cell_sweep, "cell_sweep", sections["cell_sweep"], ov),
        lut=_apply(cfg.lut, "lut", sections["lut"], ov),
        array=_apply(cfg.array, "array", sections["array"], ov),
        experiment=_apply(cfg.experiment, "experiment", sections["experiment"], ov),
        overrides=ov,
    )
