"""Scenario runner: configuration, controller wiring, metrics and CLI."""

from .config import ConfigError, RunConfig, config_from_dict, load_config
from .metrics import RunMetrics, compare_runs
from .runner import RunResult, run_scenario
from .scenarios import SCENARIOS, list_scenarios, scenario_config

__all__ = [
    "ConfigError",
    "RunConfig",
    "RunMetrics",
    "RunResult",
    "SCENARIOS",
    "compare_runs",
    "config_from_dict",
    "list_scenarios",
    "load_config",
    "run_scenario",
    "scenario_config",
]
