"""Compact MNA circuit simulator for CMOS and CMOS-memristor pixel circuits."""

from .analysis import (
    AreaConfig, KneeReport, PixelReport, ResponseFit, area_report, average_power,
    compare_pixels, detect_knee, dynamic_range_db, fit_log_slope, output_swing,
)
from .devices import (
    Dc, MemristorCard, MosfetCard, PhotodiodeCard, Pulse, Pwl, memristance,
    mosfet_eval, nmos_card, pmos_card, window_fn,
)
from .engine import (
    NonConvergence, SimOptions, SimulationError, assemble, dc_operating_point, dc_sweep,
    log_points, response_sweep, transient,
)
from .netlist import BUILTINS, Circuit, builtin, parse, serialize, validate

__version__ = "0.1.0"
