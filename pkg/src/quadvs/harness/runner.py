"""Wire the controller to the plant, run a scenario and write its traces."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..arm_control import ArmGains
from ..kinematics import camera_pose, end_effector_world
from ..locomotion import GaitSchedule, LegGains, MpcWeights
from ..model import KinematicModel
from ..observer import ObserverGains
from ..rotations import SingularAttitudeError
from ..servo import ServoGains
from ..sim import NumericalFault, Plant, PlantConfig, TargetScript, TrackingLost, initial_robot_state
from .config import RunConfig, config_to_dict
from .controller import VisualServoController
from .metrics import RunMetrics, compute_metrics

AXES = ("x", "y", "z")
LEG_JOINTS = [f"{leg}_{j}" for leg in ("FL", "FR", "RL", "RR") for j in ("abad", "hip", "knee")]
ARM_JOINTS = [f"arm{i}" for i in range(1, 7)]

CSV_HEADERS = {
    "features": ["t"] + [f"h_o_{a}" for a in AXES] + [f"h_t_{a}" for a in AXES] + [f"e_{a}" for a in AXES]
    + ["e_norm", "arm_active"],
    "observer": ["t"] + [f"e_o_{a}" for a in AXES] + [f"y_{a}" for a in AXES] + [f"v_T_true_{a}" for a in AXES]
    + ["estimate_error"],
    "references": ["t"] + [f"v_B_d_{a}" for a in AXES] + [f"p_B_d_{a}" for a in AXES]
    + [f"qd_d_{j}" for j in ARM_JOINTS] + [f"q_d_{j}" for j in ARM_JOINTS] + ["arm_frozen"],
    "forces": ["t"] + [f"f_{leg}_{a}" for leg in ("FL", "FR", "RL", "RR") for a in AXES]
    + ["status", "iterations", "kkt_residual", "constraint_residual"],
    "torques": ["t"] + [f"tau_{j}" for j in LEG_JOINTS] + [f"tau_{j}" for j in ARM_JOINTS] + ["arm_saturated"],
    "errors": ["t", "tracking_error"] + [f"ee_{a}" for a in AXES] + [f"target_{a}" for a in AXES] + ["visual_error"],
}
TIMING_COLUMN = "solve_time"


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.10g}"


@dataclass
class RunResult:
    config: RunConfig
    metrics: RunMetrics
    rows: dict = field(default_factory=dict)
    output_dir: Path | None = None

    @property
    def exit_code(self) -> int:
        return self.metrics.exit_code


def build_model(cfg: RunConfig) -> KinematicModel:
    return KinematicModel.from_dict(cfg.model) if cfg.model else KinematicModel()


def build_plant(cfg: RunConfig, model: KinematicModel) -> Plant:
    p = cfg.plant
    pc = PlantConfig(cfg.tier, cfg.timing.plant_dt, p.tau_lag, sway_roll=p.sway_roll, sway_pitch=p.sway_pitch,
                     sway_freq=p.sway_freq, noise_px=p.noise_px, fov=p.fov)
    tg = cfg.target
    script = TargetScript(tg.kind, tg.speed, tg.accel, tg.cap, tg.initial_position, tg.direction,
                          tg.marker_size, tg.marker_drop)
    return Plant(model, pc, script, initial_robot_state(model, cfg.arm.initial), seed=cfg.seed)


def build_controller(cfg: RunConfig, model: KinematicModel, script: TargetScript) -> VisualServoController:
    o, s, mp, g, lg, a = cfg.observer, cfg.servo, cfg.mpc, cfg.gait, cfg.legs, cfg.arm
    return VisualServoController(
        model,
        marker_offsets=script.marker_offsets(),
        observer_gains=ObserverGains(o.k1, o.k2, o.k3, o.k4, o.p, o.y_max),
        servo_gains=ServoGains(s.K_b, s.K_a, s.activation_angle, s.max_joint_rate),
        use_observer=cfg.observer_mode == "sto",
        tier=cfg.tier,
        control_dt=1.0 / cfg.timing.control_rate,
        mpc_weights=MpcWeights(mp.horizon, mp.dt, mp.Q, mp.R, mp.f_min, mp.f_max_factor, mp.max_iter),
        mu=mp.mu,
        gait=GaitSchedule(g.period, g.duty, g.offsets),
        leg_gains=LegGains(lg.kp_swing, lg.kd_swing, lg.kp_stance, lg.kd_stance, lg.swing_height, lg.k_step),
        arm_gains=ArmGains(a.kp, a.kd, a.torque_limit),
        log_timing=cfg.log_timing,
    )


def _due(k: int, rate: float, plant_rate: int) -> bool:
    """Integer-tick scheduling: fire when ``floor(k * rate / plant_rate)`` advances."""
    if k == 0:
        return True
    r = round(rate * 1000)
    return (k * r) // (plant_rate * 1000) != ((k - 1) * r) // (plant_rate * 1000)


def run_scenario(cfg: RunConfig, write: bool = True) -> RunResult:
    """Run one configuration; optionally write CSV traces and ``summary.json``."""
    cfg.validate()
    model = build_model(cfg)
    plant = build_plant(cfg, model)
    ctrl = build_controller(cfg, model, plant.script)
    dt = cfg.timing.plant_dt
    plant_rate = int(round(1.0 / dt))
    n_ticks = int(round(cfg.duration / dt))
    rows = {k: [] for k in CSV_HEADERS}
    ts, track, vis, oerr, mpc_log = [], [], [], [], []
    frozen = saturated = 0
    status = failure_reason = None
    failure_time = None
    out = None
    gait = ctrl.gait
    try:
        for k in range(n_ticks + 1):
            t = k * dt
            if cfg.tier == "dynamic":
                plant.set_contacts(gait.contacts(t))
            if _due(k, cfg.timing.control_rate, plant_rate):
                m = plant.measure()
                out = ctrl.step(m, mpc_due=_due(k, cfg.timing.mpc_rate, plant_rate))
                _log(plant, model, m, out, rows, cfg)
                ts.append(t)
                track.append(rows["errors"][-1][1])
                vis.append(float(np.linalg.norm(out.e)))
                oerr.append(rows["observer"][-1][-1])
                frozen += int(out.arm_frozen)
                saturated += int(out.arm_saturated)
                if out.mpc is not None:
                    mpc_log.append(out.mpc)
            if k == n_ticks:
                break
            if cfg.tier == "kinematic":
                plant.step_kinematic(out.v_B_d, out.qd_arm_d)
            else:
                plant.step_dynamic(out.leg_tau, out.arm_tau)
    except TrackingLost as exc:
        status, failure_time, failure_reason = "tracking_lost", plant.t, str(exc)
    except (NumericalFault, SingularAttitudeError, np.linalg.LinAlgError, RuntimeError, ValueError) as exc:
        status, failure_time, failure_reason = "numerical_fault", plant.t, f"{type(exc).__name__}: {exc}"
    if not ts:
        ts, track, vis, oerr = [0.0], [float("nan")], [float("nan")], [float("nan")]
    metrics = compute_metrics(cfg, ts, track, vis, oerr, status, failure_time, failure_reason, mpc_log,
                              frozen, saturated)
    result = RunResult(cfg, metrics, rows)
    if write:
        result.output_dir = write_outputs(result)
    return result


def _log(plant: Plant, model, m, out, rows, cfg) -> None:
    t = m.t
    s = m.robot
    ee = end_effector_world(model, s)
    p_T, v_T = plant.target()
    R_ic, _ = camera_pose(model, s)
    v_T_c = R_ic.T @ v_T
    rows["features"].append([t, *out.h_o, *out.h_t, *out.e, float(np.linalg.norm(out.e)), out.arm_active])
    rows["observer"].append([t, *out.e_o, *out.y, *v_T_c, float(np.linalg.norm(out.y - v_T_c))])
    rows["references"].append([t, *out.v_B_d, *out.p_B_d, *out.qd_arm_d, *out.q_arm_d, out.arm_frozen])
    rows["errors"].append([t, float(np.linalg.norm(ee - p_T)), *ee, *p_T, float(np.linalg.norm(out.e))])
    if cfg.tier == "dynamic":
        rows["torques"].append([t, *out.leg_tau.reshape(-1), *out.arm_tau, out.arm_saturated])
        if out.mpc is not None:
            sol = out.mpc
            row = [t, *sol.first.reshape(-1), sol.status, sol.iterations, sol.kkt_residual, sol.constraint_residual]
            if cfg.log_timing:
                row.append(sol.solve_time)
            rows["forces"].append(row)


def write_outputs(result: RunResult) -> Path:
    cfg = result.config
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, header in CSV_HEADERS.items():
        header = list(header)
        if name == "forces" and cfg.log_timing:
            header.append(TIMING_COLUMN)
        with open(out_dir / f"{name}.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(header)
            for row in result.rows.get(name, []):
                w.writerow([_fmt(x) for x in row])
    summary = {"config": config_to_dict(cfg), "metrics": result.metrics.to_dict(), "exit_code": result.exit_code}
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return out_dir
