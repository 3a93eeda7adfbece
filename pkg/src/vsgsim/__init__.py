"""Simulation and small-signal analysis of a grid-connected virtual synchronous generator
with adaptive inertia and output-speed feedback."""

from .controllers import ControlInputs, ControlOutputs, VsgConfig, make_strategy, proposed_update
from .errors import ConfigError, SimulationError, UnstableSystemError
from .grid import GridParams, Impedance, aggregate_impedance, power_output, synchronizing_coefficient
from .metrics import Metrics, compare, compute_metrics
from .simulator import Plant, Scenario, Trace, VsgState, run
from .smallsignal import LoopParams, closed_loop_modes, kt_for_zeta, open_loop_zeta, stability_check

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ControlInputs", "ControlOutputs", "GridParams", "Impedance", "LoopParams",
    "Metrics", "Plant", "Scenario", "SimulationError", "Trace", "UnstableSystemError",
    "VsgConfig", "VsgState", "aggregate_impedance", "closed_loop_modes", "compare",
    "compute_metrics", "kt_for_zeta", "make_strategy", "open_loop_zeta", "power_output",
    "proposed_update", "run", "stability_check", "synchronizing_coefficient",
]
