"""Run configuration: a YAML document parsed strictly into dataclasses.

Every section is optional and falls back to the defaults below; unknown keys
anywhere are rejected. See ``docs/config.md`` for the field reference.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass(frozen=True)
class TargetSection:
    kind: str = "line"
    speed: float = 0.3
    accel: float = 0.0
    cap: float = 0.3
    initial_position: tuple = (0.55, 0.05, 0.30)
    direction: tuple = (1.0, 0.0, 0.0)
    marker_size: float = 0.1
    marker_drop: float = 0.15


@dataclass(frozen=True)
class TimingSection:
    plant_dt: float = 1e-3
    control_rate: float = 400.0
    mpc_rate: float = 100.0


@dataclass(frozen=True)
class PlantSection:
    tau_lag: float = 0.05
    sway_roll: float = 0.0
    sway_pitch: float = 0.0
    sway_freq: float = 2.5
    noise_px: float = 0.0
    fov: float = 1.0


@dataclass(frozen=True)
class ObserverSection:
    k1: float = 10.0
    k2: float = 100.0
    k3: float = 0.05
    k4: float = 0.05
    p: float = 0.4
    y_max: float = 2.0


@dataclass(frozen=True)
class ServoSection:
    K_b: tuple = (0.8, 0.8, 0.8)
    K_a: tuple = (1.0, 1.0, 1.0)
    activation_angle: float = 0.5
    max_joint_rate: float = 2.0


@dataclass(frozen=True)
class MpcSection:
    horizon: int = 10
    dt: float = 0.03
    Q: tuple = (10.0, 10.0, 10.0, 2.0, 2.0, 50.0, 1.0, 1.0, 0.3, 0.2, 0.2, 0.1, 0.0)
    R: float = 1e-5
    mu: float = 0.5
    f_min: float = 0.0
    f_max_factor: float = 2.0
    max_iter: int = 500


@dataclass(frozen=True)
class GaitSection:
    period: float = 0.4
    duty: float = 0.5
    offsets: tuple = (0.0, 0.5, 0.5, 0.0)


@dataclass(frozen=True)
class LegSection:
    kp_swing: tuple = (400.0, 400.0, 400.0)
    kd_swing: tuple = (15.0, 15.0, 15.0)
    kp_stance: tuple = (0.0, 0.0, 0.0)
    kd_stance: tuple = (0.0, 0.0, 0.0)
    swing_height: float = 0.08
    k_step: float = 0.03


@dataclass(frozen=True)
class ArmSection:
    kp: tuple = (100.0,) * 6
    kd: tuple = (20.0,) * 6
    torque_limit: float = 30.0
    initial: tuple = (0.0, 0.67, 0.43, 0.0, 0.65, 0.0)


@dataclass(frozen=True)
class MetricsSection:
    convergence_threshold: float = 0.05
    convergence_hold: float = 2.0
    observer_threshold: float = 0.02
    steady_fraction: float = 0.5  # final fraction of the run treated as steady state


@dataclass(frozen=True)
class RunConfig:
    schema_version: int = SCHEMA_VERSION
    scenario: str = "custom"
    duration: float = 20.0
    seed: int = 0
    output_dir: str = "runs/out"
    observer_mode: str = "sto"
    tier: str = "kinematic"
    log_timing: bool = False
    target: TargetSection = field(default_factory=TargetSection)
    timing: TimingSection = field(default_factory=TimingSection)
    plant: PlantSection = field(default_factory=PlantSection)
    observer: ObserverSection = field(default_factory=ObserverSection)
    servo: ServoSection = field(default_factory=ServoSection)
    mpc: MpcSection = field(default_factory=MpcSection)
    gait: GaitSection = field(default_factory=GaitSection)
    legs: LegSection = field(default_factory=LegSection)
    arm: ArmSection = field(default_factory=ArmSection)
    metrics: MetricsSection = field(default_factory=MetricsSection)
    model: dict = field(default_factory=dict)  # overrides for KinematicModel fields

    def validate(self) -> "RunConfig":
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}")
        if self.observer_mode not in ("sto", "wosto"):
            raise ConfigError("observer_mode must be 'sto' or 'wosto'")
        if self.tier not in ("kinematic", "dynamic"):
            raise ConfigError("tier must be 'kinematic' or 'dynamic'")
        if self.duration <= 0:
            raise ConfigError("duration must be positive")
        tm = self.timing
        plant_rate = 1.0 / tm.plant_dt
        if abs(plant_rate - round(plant_rate)) > 1e-6:
            raise ConfigError("1 / plant_dt must be an integer number of Hz")
        if not 0 < tm.mpc_rate <= tm.control_rate <= round(plant_rate):
            raise ConfigError("need 0 < mpc_rate <= control_rate <= plant rate")
        return self

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes).validate()


def _coerce(value, default):
    if isinstance(default, tuple) and isinstance(value, list):
        return tuple(_coerce(v, default[0] if default else None) for v in value)
    if isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    return value


def _build(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'} must be a mapping")
    flds = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(flds))
    if unknown:
        raise ConfigError(f"unknown key(s) in {path or 'config'}: {', '.join(unknown)}")
    kw = {}
    defaults = cls()
    for k, v in data.items():
        d = getattr(defaults, k)
        if dataclasses.is_dataclass(d):
            kw[k] = _build(type(d), v, f"{path}.{k}" if path else k)
        elif isinstance(d, dict):
            if not isinstance(v, dict):
                raise ConfigError(f"{k} must be a mapping")
            kw[k] = dict(v)
        else:
            v = _coerce(v, d)
            if d is not None and not isinstance(v, type(d)) and not (isinstance(d, float) and isinstance(v, float)):
                raise ConfigError(f"{path + '.' if path else ''}{k}: expected {type(d).__name__}, got {type(v).__name__}")
            kw[k] = v
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def config_from_dict(data: dict) -> RunConfig:
    if "schema_version" not in data:
        raise ConfigError("missing schema_version")
    return _build(RunConfig, data, "").validate()


def load_config(path) -> RunConfig:
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(data or {})


def config_to_dict(cfg: RunConfig) -> dict:
    def conv(x):
        if isinstance(x, tuple):
            return [conv(v) for v in x]
        if isinstance(x, dict):
            return {k: conv(v) for k, v in x.items()}
        return x

    return conv(dataclasses.asdict(cfg))
