"""Discrete-event simulator for energy-duration based collision detection in
802.11 infrastructure networks, plus an active-antenna noise-figure calculator."""

from cdetsim.kernel import Event, SeededRng, SimulationError, Simulator, uniform_int
from cdetsim.scenario import Scenario, load_scenario
from cdetsim.network import Network, run_scenario
from cdetsim.metrics import RunMetrics

__all__ = [
    "Event",
    "Network",
    "RunMetrics",
    "Scenario",
    "SeededRng",
    "SimulationError",
    "Simulator",
    "load_scenario",
    "run_scenario",
    "uniform_int",
]

__version__ = "0.1.0"
