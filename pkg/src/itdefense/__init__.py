"""Deterministic 2D engagement simulator: an inbound threat against a screen
of expendable interceptors directed by a central command node."""

from .engine import EngagementEvent, EngagementResult, Outcome, run
from .geometry import Infeasible, InterceptSolution, solve_intercept
from .scenario import (
    ScenarioConfig,
    ScenarioError,
    load_scenario,
    load_scenario_file,
    validate,
    write_scenario,
)

__all__ = [
    "EngagementEvent",
    "EngagementResult",
    "Infeasible",
    "InterceptSolution",
    "Outcome",
    "ScenarioConfig",
    "ScenarioError",
    "load_scenario",
    "load_scenario_file",
    "run",
    "solve_intercept",
    "validate",
    "write_scenario",
]

__version__ = "0.1.0"
