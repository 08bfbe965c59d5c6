"""Link-level simulator of sensing handover in integrated sensing-and-communication networks."""

from .geometry import AngleSector, LosState, Obstacle, Point, Trajectory
from .channel import ArrayConfig, FadingParams, PathLossParams, RcsModel, Rng
from .linkbudget import (
    AccessPoint,
    CommAssignment,
    CommLink,
    RadioParams,
    Scene,
    SensingConfiguration,
    UserEquipment,
)
from .handover import HandoverPolicy, PolicyMode
from .simengine import MonteCarloSummary, Scenario, TraceLog, run, run_monte_carlo
from .scenario_io import ScenarioParseError, load_scenario, parse_scenario, serialize_scenario

__version__ = "0.1.0"

__all__ = [
    "AccessPoint", "AngleSector", "ArrayConfig", "CommAssignment", "CommLink", "FadingParams",
    "HandoverPolicy", "LosState", "MonteCarloSummary", "Obstacle", "PathLossParams", "Point",
    "PolicyMode", "RadioParams", "RcsModel", "Rng", "Scenario", "ScenarioParseError", "Scene",
    "SensingConfiguration", "TraceLog", "Trajectory", "UserEquipment", "load_scenario",
    "parse_scenario", "run", "run_monte_carlo", "serialize_scenario",
]
