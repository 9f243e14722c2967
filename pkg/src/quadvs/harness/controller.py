"""Visual-servoing controller: features -> observer -> references -> MPC and torque laws.

The controller only consumes :class:`quadvs.sim.Measurement` objects. It
never touches the plant or the target script.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..arm_control import ArmGains, arm_torque
from ..features import VirtualPointSet, point_jacobian, target_centroid, virtual_centroid, visual_error
from ..kinematics import (
    RobotState,
    arm_jacobian,
    camera_pose,
    camera_twist,
    end_effector_in_camera,
    leg_kinematics,
)
from ..locomotion import GaitSchedule, LegGains, MpcWeights, SrbModel, leg_torque, raibert_footstep, srb_mpc, srb_state
from ..locomotion.gait import swing_trajectory
from ..locomotion.mpc import MpcSolution
from ..model import GRAVITY, KinematicModel
from ..observer import ObserverGains, sto_init, sto_step
from ..rotations import rot_z, virtual_plane_rotation
from ..servo import (
    NearSingularError,
    ReferenceIntegrator,
    ServoGains,
    arm_active,
    arm_reference_rate,
    base_reference_velocity,
    clamp_rates,
)
from ..sim import Measurement, TrackingLost


@dataclass
class ControlOutput:
    """Commands plus everything the harness logs for one control tick."""

    t: float
    v_B_d: np.ndarray
    qd_arm_d: np.ndarray
    h_o: np.ndarray
    h_t: np.ndarray
    e: np.ndarray
    e_o: np.ndarray
    y: np.ndarray
    arm_active: bool
    arm_frozen: bool
    p_B_d: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q_arm_d: np.ndarray = field(default_factory=lambda: np.zeros(6))
    leg_tau: np.ndarray = field(default_factory=lambda: np.zeros((4, 3)))
    arm_tau: np.ndarray = field(default_factory=lambda: np.zeros(6))
    arm_saturated: bool = False
    mpc: MpcSolution | None = None  # set on ticks where the MPC was solved


def virtual_offsets_from_markers(marker_offsets, model: KinematicModel, yaw0: float) -> np.ndarray:
    """Virtual-point offsets mirroring the known marker layout in the leveled camera frame.

    With these offsets the virtual points coincide with the markers exactly
    when the tool origin reaches the target origin on a level base.
    """
    R_ic_level = rot_z(yaw0) @ model.R_bc
    return np.asarray(marker_offsets, dtype=float) @ R_ic_level


class VisualServoController:
    def __init__(self, model: KinematicModel, *, marker_offsets, observer_gains: ObserverGains,
                 servo_gains: ServoGains, use_observer: bool = True, tier: str = "kinematic",
                 control_dt: float = 0.0025, mpc_weights: MpcWeights = MpcWeights(), mu: float = 0.5,
                 gait: GaitSchedule = GaitSchedule(), leg_gains: LegGains = LegGains(),
                 arm_gains: ArmGains = ArmGains(), gravity: float = GRAVITY, log_timing: bool = False):
        self.model = model
        self.observer_gains = observer_gains
        self.servo_gains = servo_gains
        self.use_observer = use_observer
        self.tier = tier
        self.control_dt = control_dt
        self.mpc_weights = mpc_weights
        self.gait = gait
        self.leg_gains = leg_gains
        self.arm_gains = arm_gains
        self.gravity = gravity
        self.log_timing = log_timing
        self.marker_offsets = np.asarray(marker_offsets, dtype=float)
        self.srb = SrbModel(model.total_mass, model.composite_inertia(np.zeros(6)), gravity, mu)
        self.obs = None
        self.vp = None
        self.ref = None
        self.t_last = None
        self.mpc_solution = None
        self.liftoff = np.zeros((4, 3))
        self.prev_contacts = np.ones(4, dtype=bool)

    # ------------------------------------------------------------------ helpers
    def _init(self, m: Measurement) -> None:
        s = m.robot
        yaw0 = float(s.euler[0])
        self.vp = VirtualPointSet(virtual_offsets_from_markers(self.marker_offsets, self.model, yaw0))
        self.ref = ReferenceIntegrator(s.p_B.copy(), yaw0, s.q_arm.copy())
        R = s.R
        for leg in range(4):
            p, _ = leg_kinematics(self.model, leg, s.q_leg(leg))
            self.liftoff[leg] = s.p_B + R @ p

    def features(self, s: RobotState, image_points):
        """Target centroid, virtual centroid with its gain, and the virtual rotation."""
        h_o = target_centroid(list(image_points)).h
        R_v = virtual_plane_rotation(s.euler, self.model.R_bc)
        O_e = end_effector_in_camera(self.model, s.q_arm)
        ft = virtual_centroid(self.vp, O_e, R_v)
        return h_o, ft.h, ft.L, R_v

    # ------------------------------------------------------------------ main step
    def step(self, m: Measurement, mpc_due: bool = False) -> ControlOutput:
        """Process one measurement. Raises :class:`TrackingLost` if any marker is unseen."""
        if not np.all(m.visible):
            raise TrackingLost(f"{int(np.sum(~m.visible))} marker(s) not visible at t={m.t:.3f}")
        if self.ref is None:
            self._init(m)
        dt = self.control_dt if self.t_last is None else m.t - self.t_last
        self.t_last = m.t
        s = m.robot
        model = self.model
        h_o, h_t, L_t, R_v = self.features(s, m.image_points)
        v_c, Om_c = camera_twist(model, s)
        if self.obs is None:
            self.obs = sto_init(h_o)
        elif dt > 0:
            self.obs = sto_step(self.obs, h_o, Om_c, v_c, L_t, self.observer_gains, min(dt, 0.01))
        y = self.obs.y.copy()
        e_o = h_o - self.obs.h_hat
        e = visual_error(h_o, h_t)
        v_T_hat = y if self.use_observer else np.zeros(3)
        R = s.R
        R_ic, _ = camera_pose(model, s)
        w_body = R.T @ s.omega_B
        v_B_d = base_reference_velocity(e, v_T_hat, w_body, R_ic, R, model.t_bc, self.servo_gains)
        v_B_d[2] = 0.0  # the base only translates in the horizontal plane
        active = arm_active(h_o, h_t, self.servo_gains)
        frozen = False
        qd_d = np.zeros(6)
        if active:
            J_e = arm_jacobian(model, s.q_arm)
            J_t = point_jacobian(model.R_bc.T)
            try:
                qd_d = arm_reference_rate(e, L_t, R_v, J_t, J_e, self.servo_gains)
                qd_d = clamp_rates(qd_d, self.servo_gains.max_joint_rate)
            except NearSingularError:
                frozen = True
                qd_d = np.zeros(6)
        self.ref.step(v_B_d, qd_d, max(dt, 1e-9))
        out = ControlOutput(m.t, v_B_d, qd_d, h_o, h_t, e, e_o, y, active, frozen,
                            self.ref.p_d.copy(), self.ref.q_arm_d.copy())
        if self.tier == "dynamic":
            self._torques(m, out, mpc_due)
        return out

    # ------------------------------------------------------------------ dynamic tier
    def _com_offset(self, s: RobotState) -> np.ndarray:
        """System CoM relative to the base origin, base coordinates."""
        chain = self.model.arm_chain()
        coms, _, _, _ = chain.com_jacobians(s.q_arm)
        masses = np.array([lk.mass for lk in chain.links])
        return (masses[:, None] * (coms + self.model.t_bs)).sum(axis=0) / self.model.total_mass

    def _com_world(self, s: RobotState) -> np.ndarray:
        return s.p_B + s.R @ self._com_offset(s)

    def _footholds(self, s: RobotState, contacts_now) -> np.ndarray:
        """Current stance feet and planned touchdown points of swing feet (world)."""
        R = s.R
        g = self.gait
        progress = g.swing_progress(self.t_last)
        feet = np.zeros((4, 3))
        v_xy = s.v_B.copy()
        v_xy[2] = 0.0
        # neutral points are shifted with the CoM so diagonal support lines pass beneath it
        shift = self._com_offset(s)
        shift[2] = 0.0
        for leg in range(4):
            if contacts_now[leg]:
                p, _ = leg_kinematics(self.model, leg, s.q_leg(leg))
                feet[leg] = s.p_B + R @ p
                feet[leg][2] = 0.0
            else:
                t_left = (1.0 - progress[leg]) * g.swing_time
                hip = s.p_B + R @ (self.model.hip_position(leg) + shift) + v_xy * t_left
                feet[leg] = raibert_footstep(hip, v_xy, self.ref.v_d, g.stance_time, self.leg_gains.k_step)
                feet[leg][2] = 0.0
        return feet

    def _torques(self, m: Measurement, out: ControlOutput, mpc_due: bool) -> None:
        s = m.robot
        model = self.model
        g = self.gait
        R = s.R
        contacts = g.contacts(m.t)
        for leg in range(4):
            if self.prev_contacts[leg] and not contacts[leg]:
                p, _ = leg_kinematics(model, leg, s.q_leg(leg))
                self.liftoff[leg] = s.p_B + R @ p
        self.prev_contacts = contacts.copy()
        feet = self._footholds(s, contacts)
        if mpc_due or self.mpc_solution is None:
            W = self.mpc_weights
            com = self._com_world(s)
            x0 = srb_state(s.euler, com, s.omega_B, s.v_B, self.gravity)
            x_ref = self.ref.horizon(W.horizon, W.dt)
            x_ref[:, 3:6] += com - s.p_B  # track the base reference with the CoM
            x_ref[:, 5] = self.ref.p_d[2] + (com - s.p_B)[2]
            sched = g.horizon(m.t, W.horizon, W.dt)
            self.mpc_solution = srb_mpc(x0, x_ref, sched, feet - com, self.srb, W, self.mpc_solution, self.log_timing)
            out.mpc = self.mpc_solution
        grf = self.mpc_solution.first
        g_B = R.T @ np.array([0.0, 0.0, -self.gravity])
        progress = g.swing_progress(m.t)
        tau = np.zeros((4, 3))
        for leg in range(4):
            q, qd = s.q_leg(leg), s.qd_leg(leg)
            if contacts[leg]:
                p, _ = leg_kinematics(model, leg, q)
                cmd = leg_torque(model, leg, "stance", q, qd, p, np.zeros(3), np.zeros(3), R, -grf[leg], self.leg_gains)
            else:
                pw, vw, aw = swing_trajectory(self.liftoff[leg], feet[leg], progress[leg], g.swing_time,
                                              self.leg_gains.swing_height)
                rel = pw - s.p_B
                p_ref = R.T @ rel
                v_ref = R.T @ (vw - s.v_B - np.cross(s.omega_B, rel))
                a_ref = R.T @ aw
                cmd = leg_torque(model, leg, "swing", q, qd, p_ref, v_ref, a_ref, R, np.zeros(3),
                                 self.leg_gains, g_B)
            tau[leg] = cmd.tau
        out.leg_tau = tau
        ac = arm_torque(model, self.ref.q_arm_d, self.ref.qd_arm_d, self.ref.qdd_arm_d, s, self.arm_gains, self.gravity)
        out.arm_tau = ac.tau
        out.arm_saturated = ac.saturated


__all__ = ["ControlOutput", "VisualServoController", "virtual_offsets_from_markers"]
