"""Two-market artificial market simulator for tick-size competition."""
from ._jit import USE_NUMBA
from .engine import ScenarioConfig, Simulation, SimulationOutput, load_config, run

__all__ = ["USE_NUMBA", "ScenarioConfig", "Simulation", "SimulationOutput", "load_config", "run"]
__version__ = "0.1.0"
