"""Discrete-event simulator for opportunistic networks.

Compares Epidemic, PROPHET and an integrated threshold/flooding router over
POI-driven mobility on an open plane.
"""

from .config import ConfigError, ScenarioConfig, parse_scenario
from .core import Message, Simulation, run
from .stats import StatsReport

__all__ = ["ConfigError", "Message", "ScenarioConfig", "Simulation", "StatsReport",
           "parse_scenario", "run"]
__version__ = "0.1.0"
