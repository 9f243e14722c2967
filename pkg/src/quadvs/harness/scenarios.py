"""Built-in scenario catalog."""

from __future__ import annotations

from .config import RunConfig, TargetSection

SCENARIOS = {
    "line-0.3": ("constant 0.3 m/s straight line", TargetSection(kind="line", speed=0.3), 20.0),
    "line-0.5": ("constant 0.5 m/s straight line", TargetSection(kind="line", speed=0.5), 20.0),
    "ramp-0.015": ("0.015 m/s^2 ramp to 0.3 m/s", TargetSection(kind="ramp", accel=0.015, cap=0.3), 30.0),
    "ramp-0.03": ("0.03 m/s^2 ramp to 0.3 m/s", TargetSection(kind="ramp", accel=0.03, cap=0.3), 30.0),
    "s-curve": (
        "0.1 m/s forward, lateral +-0.02 m/s^2 capped at 0.1 m/s",
        TargetSection(kind="s-curve", speed=0.1, accel=0.02, cap=0.1),
        40.0,
    ),
    "static": ("motionless target", TargetSection(kind="static", speed=0.0), 10.0),
}


def list_scenarios():
    return [(sid, desc) for sid, (desc, _, _) in SCENARIOS.items()]


def scenario_config(scenario_id: str, **overrides) -> RunConfig:
    """Default configuration for a catalog scenario; keyword overrides replace top-level fields."""
    if scenario_id not in SCENARIOS:
        raise KeyError(f"unknown scenario {scenario_id!r}; known: {', '.join(SCENARIOS)}")
    _, target, duration = SCENARIOS[scenario_id]
    base = dict(scenario=scenario_id, target=target, duration=duration, output_dir=f"runs/{scenario_id}")
    base.update(overrides)
    return RunConfig(**base).validate()
