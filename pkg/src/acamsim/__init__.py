"""Behavioral simulator for LUT-based, feedback-controlled memristor programming in analog CAMs."""

from .array import ArrayState, CellAddress, SearchWindow
from .comparator import (
    ComparatorParams,
    boundary_program_mode,
    boundary_search_mode,
    solve_program_branch,
    solve_search_branch,
    vdls_from_vdlp,
)
from .controller import ControllerConfig, ProgramResult, periphery_from_ctrl, run_reset, run_set
from .devices import MemristorParams, MemristorState, TransistorParams, conductance, memristor_step, transistor_current
from .lut import LutTable, build_lut, g_of_vdlp, vdlp_for_target

__version__ = "0.1.0"
