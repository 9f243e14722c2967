"""Deterministic plant: base and arm motion, scripted target and a synthetic camera.

Two fidelity tiers:

``kinematic``
    The base follows the commanded linear velocity through a first-order lag,
    attitude follows an optional prescribed roll/pitch sway (yaw fixed) and
    the arm integrates commanded joint rates. Legs are not simulated.

``dynamic``
    Base and arm integrate the coupled floating-base equations under
    ground-reaction forces and arm torques (semi-implicit Euler). Legs are
    massless with respect to the base: stance feet are pinned to the ground
    and their joint torques are converted to contact forces through the foot
    Jacobian; swing legs follow their own fixed-base joint dynamics.

Ground truth (target pose and marker depths) stays inside :class:`Plant`; the
controller only receives a :class:`Measurement`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kinematics import (
    RobotState,
    camera_pose,
    floating_base_bias,
    floating_base_mass_matrix,
    leg_dynamics,
    leg_inverse_kinematics,
    leg_kinematics,
    LegReachError,
)
from .model import GRAVITY, KinematicModel
from .rotations import euler_rates_to_angular_velocity, exp_so3, rotation_to_euler

FOCAL_PX = 615.0  # focal length used to convert pixel noise to normalized units


class NumericalFault(RuntimeError):
    """Plant state became non-finite or left the model's valid domain."""


class TrackingLost(RuntimeError):
    """No usable view of the target."""


# ---------------------------------------------------------------------------- target


@dataclass(frozen=True)
class TargetScript:
    """Scripted translational target motion; orientation stays aligned with ``I``.

    kinds: ``line`` (constant ``speed`` along ``direction``), ``ramp``
    (acceleration ``accel`` along ``direction`` up to ``cap``), ``s-curve``
    (constant ``speed`` along ``direction`` while the lateral velocity ramps
    at +-``accel`` and reverses each time it reaches ``cap``) and ``static``.
    """

    kind: str = "line"
    speed: float = 0.3
    accel: float = 0.0
    cap: float = 0.3
    initial_position: tuple = (1.0, 0.0, 0.30)
    direction: tuple = (1.0, 0.0, 0.0)
    marker_size: float = 0.1
    marker_drop: float = 0.15  # tracking point sits this far above the marker plane

    def __post_init__(self):
        if self.kind not in ("line", "ramp", "s-curve", "static"):
            raise ValueError(f"unknown target kind {self.kind!r}")
        if self.kind in ("ramp", "s-curve") and (self.accel <= 0 or self.cap <= 0):
            raise ValueError(f"{self.kind} needs positive accel and cap")
        d = np.asarray(self.direction, dtype=float)
        if d.shape != (3,) or np.linalg.norm(d) == 0:
            raise ValueError("direction must be a non-zero 3-vector")

    @property
    def unit_direction(self) -> np.ndarray:
        d = np.asarray(self.direction, dtype=float)
        return d / np.linalg.norm(d)

    @property
    def lateral_direction(self) -> np.ndarray:
        d = self.unit_direction
        return np.array([-d[1], d[0], 0.0]) / max(np.hypot(d[0], d[1]), 1e-12)

    def marker_offsets(self) -> np.ndarray:
        a = self.marker_size / 2
        z = -self.marker_drop
        return np.array([[a, a, z], [-a, a, z], [-a, -a, z], [a, -a, z]])


def _ramp(t, a, cap):
    """Distance and speed of a ramp from rest with acceleration ``a`` capped at ``cap``."""
    tc = cap / a
    if t <= tc:
        return 0.5 * a * t * t, a * t
    return 0.5 * a * tc * tc + cap * (t - tc), cap


def _triangle(t, a, cap):
    """Lateral offset and velocity: 0 -> +cap, then bouncing between -cap and +cap."""
    t1 = cap / a
    if t <= t1:
        return 0.5 * a * t * t, a * t
    y1 = 0.5 * a * t1 * t1
    tau = (t - t1) % (4 * t1)
    if tau < 2 * t1:
        return y1 + cap * tau - 0.5 * a * tau * tau, cap - a * tau
    s = tau - 2 * t1
    return y1 - cap * s + 0.5 * a * s * s, -cap + a * s


def target_state(script: TargetScript, t: float):
    """Target origin position and velocity (inertial frame) at time ``t``."""
    if t < 0:
        raise ValueError("time must be non-negative")
    p0 = np.asarray(script.initial_position, dtype=float)
    d = script.unit_direction
    if script.kind == "static":
        return p0.copy(), np.zeros(3)
    if script.kind == "line":
        return p0 + script.speed * t * d, script.speed * d
    if script.kind == "ramp":
        s, v = _ramp(t, script.accel, script.cap)
        return p0 + s * d, v * d
    y, vy = _triangle(t, script.accel, script.cap)
    lat = script.lateral_direction
    return p0 + script.speed * t * d + y * lat, script.speed * d + vy * lat


def target_markers(script: TargetScript, t: float) -> np.ndarray:
    p, _ = target_state(script, t)
    return p[None, :] + script.marker_offsets()


# ---------------------------------------------------------------------------- camera


def render_features(Q_cam, noise_amplitude: float = 0.0, rng=None, fov: float = 1.0, z_min: float = 0.05):
    """Normalized image points and visibility flags for camera-frame points.

    ``noise_amplitude`` is a uniform pixel-noise half-width; it is converted
    to normalized units with a fixed focal length.
    """
    Q = np.atleast_2d(np.asarray(Q_cam, dtype=float))
    z = Q[:, 2]
    visible = z > z_min
    q = np.full((Q.shape[0], 2), np.nan)
    q[visible] = Q[visible, :2] / z[visible, None]
    visible &= np.all(np.abs(np.nan_to_num(q, nan=np.inf)) <= fov, axis=1)
    if noise_amplitude > 0:
        if rng is None:
            raise ValueError("noise requires a seeded generator")
        q = q + rng.uniform(-noise_amplitude, noise_amplitude, size=q.shape) / FOCAL_PX
    q[~visible] = np.nan
    return q, visible


@dataclass(frozen=True)
class Measurement:
    """Everything the controller may see: clock, robot state and image points."""

    t: float
    robot: RobotState
    image_points: np.ndarray
    visible: np.ndarray


# ---------------------------------------------------------------------------- plant


@dataclass(frozen=True)
class PlantConfig:
    tier: str = "kinematic"
    dt: float = 1e-3
    tau_lag: float = 0.05
    gravity: float = GRAVITY
    sway_roll: float = 0.0  # amplitude, rad
    sway_pitch: float = 0.0
    sway_freq: float = 2.5  # Hz
    noise_px: float = 0.0
    fov: float = 1.0

    def __post_init__(self):
        if self.tier not in ("kinematic", "dynamic"):
            raise ValueError(f"unknown tier {self.tier!r}")
        if self.dt <= 0 or self.tau_lag < 0:
            raise ValueError("dt must be positive and tau_lag non-negative")


class Plant:
    """Owns the clock, the true robot state and the target."""

    def __init__(self, model: KinematicModel, config: PlantConfig, script: TargetScript,
                 initial_state: RobotState, seed: int = 0):
        self.model = model
        self.config = config
        self.script = script
        self.state = initial_state.copy()
        self.tick = 0
        self.rng = np.random.default_rng(seed)
        self.yaw0 = float(self.state.euler[0])
        self.contacts = np.ones(4, dtype=bool)
        self.feet = np.zeros((4, 3))
        R = self.state.R
        for leg in range(4):
            p, _ = leg_kinematics(model, leg, self.state.q_leg(leg))
            self.feet[leg] = self.state.p_B + R @ p
        if config.tier == "kinematic":
            self._apply_sway()

    @property
    def t(self) -> float:
        return self.tick * self.config.dt

    # ---------------------------------------------------------------- ground truth
    def target(self):
        return target_state(self.script, self.t)

    def markers_in_camera(self, state: RobotState | None = None, t: float | None = None) -> np.ndarray:
        state = self.state if state is None else state
        t = self.t if t is None else t
        R_ic, p_c = camera_pose(self.model, state)
        return (target_markers(self.script, t) - p_c) @ R_ic

    def measure(self) -> Measurement:
        q, vis = render_features(self.markers_in_camera(), self.config.noise_px, self.rng, self.config.fov)
        return Measurement(self.t, self.state.copy(), q, vis)

    # ---------------------------------------------------------------- kinematic tier
    def sway(self, t: float):
        """Prescribed ``(euler, euler_rates)`` for the kinematic tier."""
        c = self.config
        w = 2 * np.pi * c.sway_freq
        pitch = c.sway_pitch * np.sin(w * t)
        roll = c.sway_roll * np.cos(w * t)
        rates = np.array([0.0, c.sway_pitch * w * np.cos(w * t), -c.sway_roll * w * np.sin(w * t)])
        return np.array([self.yaw0, pitch, roll]), rates

    def _apply_sway(self):
        eul, rates = self.sway(self.t)
        self.state.euler = eul
        self.state.omega_B = euler_rates_to_angular_velocity(eul, rates)

    def step_kinematic(self, v_B_cmd, qd_arm_cmd) -> None:
        c = self.config
        v_cmd = np.asarray(v_B_cmd, dtype=float)
        if c.tau_lag == 0:
            v = v_cmd.copy()
        else:
            a = min(1.0, c.dt / c.tau_lag)
            v = self.state.v_B + a * (v_cmd - self.state.v_B)
        self.state.v_B = v
        self.state.p_B = self.state.p_B + c.dt * v
        qd = np.asarray(qd_arm_cmd, dtype=float)
        self.state.qd_j[12:] = qd
        self.state.q_j[12:] = self.state.q_j[12:] + c.dt * qd
        self.tick += 1
        self._apply_sway()
        self._check()

    # ---------------------------------------------------------------- dynamic tier
    def contact_forces(self, leg_torques) -> np.ndarray:
        """World-frame ground-reaction forces of the stance legs for given joint torques."""
        R = self.state.R
        f = np.zeros((4, 3))
        for leg in range(4):
            if self.contacts[leg]:
                _, J = leg_kinematics(self.model, leg, self.state.q_leg(leg))
                f[leg] = -R @ np.linalg.solve(J.T, np.asarray(leg_torques[leg], dtype=float))
        return f

    def set_contacts(self, contacts) -> None:
        """Apply the schedule's contact flags; touching-down feet are pinned at ground level."""
        contacts = np.asarray(contacts, dtype=bool)
        R = self.state.R
        for leg in range(4):
            if contacts[leg] and not self.contacts[leg]:
                p, _ = leg_kinematics(self.model, leg, self.state.q_leg(leg))
                foot = self.state.p_B + R @ p
                foot[2] = 0.0
                self.feet[leg] = foot
        self.contacts = contacts.copy()
        self._update_stance_legs()

    def _update_stance_legs(self) -> None:
        s = self.state
        R = s.R
        for leg in range(4):
            if not self.contacts[leg]:
                continue
            rel = self.feet[leg] - s.p_B
            foot_B = R.T @ rel
            try:
                q = leg_inverse_kinematics(self.model, leg, foot_B)
            except LegReachError as exc:
                raise NumericalFault(f"stance leg {leg} out of reach at t={self.t:.3f}") from exc
            _, J = leg_kinematics(self.model, leg, q)
            v_rel = -R.T @ (s.v_B + np.cross(s.omega_B, rel))
            s.q_j[3 * leg : 3 * leg + 3] = q
            s.qd_j[3 * leg : 3 * leg + 3] = np.linalg.solve(J, v_rel)

    def step_dynamic(self, leg_torques, arm_tau, external_force=None) -> np.ndarray:
        """Advance one step under joint torques; returns the applied ground-reaction forces."""
        c = self.config
        s = self.state
        m = self.model
        R = s.R
        g_w = np.array([0.0, 0.0, -c.gravity])
        g_B = R.T @ g_w
        grf = self.contact_forces(leg_torques)
        F_B = R.T @ grf.sum(axis=0)
        M_B = np.zeros(3)
        for leg in range(4):
            if self.contacts[leg]:
                r = R.T @ (self.feet[leg] - s.p_B)
                M_B += np.cross(r, R.T @ grf[leg])
        if external_force is not None:
            F_B = F_B + R.T @ np.asarray(external_force, dtype=float)
        v_b, w_b = s.body_twist()
        M = floating_base_mass_matrix(m, s.q_arm)
        n_base, n_arm = floating_base_bias(m, s.q_arm, s.qd_arm, v_b, w_b, g_B)
        rhs = np.concatenate([F_B, M_B, np.asarray(arm_tau, dtype=float)]) - np.concatenate([n_base, n_arm])
        acc = np.linalg.solve(M, rhs)
        # semi-implicit Euler: velocities first, then positions with the new velocities
        v_b = v_b + c.dt * acc[:3]
        w_b = w_b + c.dt * acc[3:6]
        qd_arm = s.qd_arm + c.dt * acc[6:]
        s.v_B = R @ v_b
        s.omega_B = R @ w_b
        s.p_B = s.p_B + c.dt * s.v_B
        R_new = R @ exp_so3(c.dt * w_b)
        s.euler = rotation_to_euler(R_new)
        s.qd_j[12:] = qd_arm
        s.q_j[12:] = s.q_j[12:] + c.dt * qd_arm
        # velocities were expressed with the old attitude; keep body twist consistent
        s.v_B = R_new @ v_b
        s.omega_B = R_new @ w_b
        for leg in range(4):
            if self.contacts[leg]:
                continue
            q = s.q_leg(leg)
            qd = s.qd_leg(leg)
            Ml, nl = leg_dynamics(m, leg, q, qd, g_B)
            qdd = np.linalg.solve(Ml, np.asarray(leg_torques[leg], dtype=float) - nl)
            qd = qd + c.dt * qdd
            s.qd_j[3 * leg : 3 * leg + 3] = qd
            s.q_j[3 * leg : 3 * leg + 3] = q + c.dt * qd
        self.tick += 1
        self._update_stance_legs()
        self._check()
        return grf

    def _check(self) -> None:
        s = self.state
        for arr in (s.p_B, s.euler, s.q_j, s.v_B, s.omega_B, s.qd_j):
            if not np.all(np.isfinite(arr)):
                raise NumericalFault(f"non-finite plant state at t={self.t:.4f}")


def step_plant(plant: Plant, *args, **kwargs):
    """Advance ``plant`` by one step in its configured tier."""
    if plant.config.tier == "kinematic":
        return plant.step_kinematic(*args, **kwargs)
    return plant.step_dynamic(*args, **kwargs)


def kinetic_energy(model: KinematicModel, state: RobotState) -> float:
    """Kinetic energy of base plus arm (legs excluded)."""
    v_b, w_b = state.body_twist()
    nu = np.concatenate([v_b, w_b, state.qd_arm])
    return 0.5 * float(nu @ floating_base_mass_matrix(model, state.q_arm) @ nu)


def initial_robot_state(model: KinematicModel, q_arm, p_xy=(0.0, 0.0), yaw: float = 0.0) -> RobotState:
    """Standing robot with legs at their nominal angles and feet on the ground."""
    q = np.zeros(18)
    for leg in range(4):
        q[3 * leg : 3 * leg + 3] = model.nominal_leg_angles
    q[12:] = q_arm
    p = np.array([p_xy[0], p_xy[1], model.nominal_height()])
    return RobotState(p_B=p, euler=np.array([yaw, 0.0, 0.0]), q_j=q)


__all__ = [
    "FOCAL_PX",
    "Measurement",
    "NumericalFault",
    "Plant",
    "PlantConfig",
    "TargetScript",
    "TrackingLost",
    "initial_robot_state",
    "kinetic_energy",
    "render_features",
    "step_plant",
    "target_markers",
    "target_state",
]
