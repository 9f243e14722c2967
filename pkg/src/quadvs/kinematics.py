"""Robot state, arm/leg kinematics and the floating-base coupled arm dynamics.

Velocity conventions:

* :class:`RobotState` stores the base linear and angular velocity in the
  inertial frame (what an external observer would log).
* The dynamics routines use the base *body twist* ``nu = (v_b, w_b)``, both
  expressed in ``B``. :meth:`RobotState.body_twist` converts.

The arm mount frame ``S`` is parallel to ``B`` and offset by
``model.arm_mount``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import GRAVITY, KinematicModel
from .rotations import euler_to_rotation, skew

N_LEG_JOINTS = 12
N_ARM = 6
ARM_SLICE = slice(12, 18)


class ModelError(ValueError):
    """Raised when the model produces a non-physical quantity (e.g. non-SPD inertia)."""


class LegReachError(ValueError):
    """Foot target outside the leg workspace."""


@dataclass
class RobotState:
    """Generalized coordinates and velocities of base plus 18 joints.

    Joint order: FL, FR, RL, RR legs (abad, hip, knee each) then the six
    arm joints (indices 12..17).
    """

    p_B: np.ndarray = field(default_factory=lambda: np.zeros(3))
    euler: np.ndarray = field(default_factory=lambda: np.zeros(3))  # yaw, pitch, roll
    q_j: np.ndarray = field(default_factory=lambda: np.zeros(18))
    v_B: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega_B: np.ndarray = field(default_factory=lambda: np.zeros(3))
    qd_j: np.ndarray = field(default_factory=lambda: np.zeros(18))

    def __post_init__(self):
        for name, n in (("p_B", 3), ("euler", 3), ("q_j", 18), ("v_B", 3), ("omega_B", 3), ("qd_j", 18)):
            arr = np.array(getattr(self, name), dtype=float).reshape(-1)
            if arr.shape != (n,):
                raise ValueError(f"{name} must have {n} entries, got {arr.shape}")
            setattr(self, name, arr)

    @property
    def R(self) -> np.ndarray:
        """Base attitude ``R_IB``."""
        return euler_to_rotation(self.euler)

    @property
    def q_arm(self) -> np.ndarray:
        return self.q_j[ARM_SLICE]

    @property
    def qd_arm(self) -> np.ndarray:
        return self.qd_j[ARM_SLICE]

    def q_leg(self, leg: int) -> np.ndarray:
        return self.q_j[3 * leg : 3 * leg + 3]

    def qd_leg(self, leg: int) -> np.ndarray:
        return self.qd_j[3 * leg : 3 * leg + 3]

    def body_twist(self):
        """Base velocity ``(v_b, w_b)`` in body coordinates."""
        R = self.R
        return R.T @ self.v_B, R.T @ self.omega_B

    def copy(self) -> "RobotState":
        return RobotState(self.p_B.copy(), self.euler.copy(), self.q_j.copy(),
                          self.v_B.copy(), self.omega_B.copy(), self.qd_j.copy())


# ---------------------------------------------------------------------------- arm


def arm_forward_kinematics(model: KinematicModel, q_arm):
    """End-effector pose ``(R_SE, t_SE)`` in the arm mount frame."""
    return model.arm_chain().forward_kinematics(np.asarray(q_arm, dtype=float))


def arm_jacobian(model: KinematicModel, q_arm) -> np.ndarray:
    """6x6 Jacobian mapping arm joint rates to ``[t_dot; w]`` of E in S."""
    return model.arm_chain().jacobian(np.asarray(q_arm, dtype=float))


def arm_inverse_kinematics(model: KinematicModel, target_S, q0, iters: int = 200, tol: float = 1e-10):
    """Damped least-squares position IK; returns joint angles reaching ``target_S``.

    Only the tool position is constrained. Used for building initial arm
    configurations, not inside the control loop.
    """
    q = np.array(q0, dtype=float)
    target = np.asarray(target_S, dtype=float)
    for _ in range(iters):
        _, p = arm_forward_kinematics(model, q)
        err = target - p
        if np.linalg.norm(err) < tol:
            break
        Jv = arm_jacobian(model, q)[:3]
        q = q + Jv.T @ np.linalg.solve(Jv @ Jv.T + 1e-6 * np.eye(3), err)
    return q


# ---------------------------------------------------------------------------- camera


def camera_pose(model: KinematicModel, state: RobotState):
    """Camera orientation ``R_IC`` and position in the inertial frame."""
    R = state.R
    return R @ model.R_bc, state.p_B + R @ model.t_bc


def camera_twist(model: KinematicModel, state: RobotState):
    """Camera linear and angular velocity ``(v_c, Omega_c)`` in camera coordinates."""
    R = state.R
    R_ic = R @ model.R_bc
    v_cam_world = state.v_B + np.cross(state.omega_B, R @ model.t_bc)
    return R_ic.T @ v_cam_world, R_ic.T @ state.omega_B


def end_effector_in_camera(model: KinematicModel, q_arm) -> np.ndarray:
    """Tool origin ``O_e`` in the (real) camera frame."""
    _, t_se = arm_forward_kinematics(model, q_arm)
    return model.R_bc.T @ (model.t_bs + t_se - model.t_bc)


def end_effector_world(model: KinematicModel, state: RobotState) -> np.ndarray:
    _, t_se = arm_forward_kinematics(model, state.q_arm)
    return state.p_B + state.R @ (model.t_bs + t_se)


# ---------------------------------------------------------------------------- legs


def leg_kinematics(model: KinematicModel, leg: int, q_leg):
    """Foot position in ``B`` and the 3x3 foot Jacobian of leg ``leg``."""
    if leg not in (0, 1, 2, 3):
        raise ValueError(f"leg index must be 0..3, got {leg}")
    chain = model.leg_chain(leg)
    q = np.asarray(q_leg, dtype=float)
    _, p = chain.forward_kinematics(q)
    return p, chain.jacobian(q)[:3]


def leg_jacobian_rate(model: KinematicModel, leg: int, q_leg, qd_leg, eps: float = 1e-6):
    """Time derivative of the foot Jacobian along ``qd_leg`` (central difference)."""
    q = np.asarray(q_leg, dtype=float)
    qd = np.asarray(qd_leg, dtype=float)
    chain = model.leg_chain(leg)
    Jp = chain.jacobian(q + eps * qd)[:3]
    Jm = chain.jacobian(q - eps * qd)[:3]
    return (Jp - Jm) / (2 * eps)


def leg_inverse_kinematics(model: KinematicModel, leg: int, foot_B) -> np.ndarray:
    """Closed-form joint angles placing the foot at ``foot_B`` (knee bent backwards).

    Raises:
        LegReachError: if the point is outside the leg workspace.
    """
    side = 1.0 if leg in (0, 2) else -1.0
    d = np.asarray(foot_B, dtype=float) - model.hip_position(leg)
    l0, l1, l2 = model.abad_length, model.thigh_length, model.calf_length
    # abduction: rotate about x so the foot lies in the hip-knee plane at y = side*l0
    r_yz = np.hypot(d[1], d[2])
    if r_yz < l0:
        raise LegReachError("foot too close to the abduction axis")
    h = np.sqrt(r_yz**2 - l0**2)
    q0 = np.arctan2(d[2], d[1]) - np.arctan2(-h, side * l0)
    # planar two-link problem in the rotated leg plane
    x = d[0]
    z = -h
    D = (x * x + z * z - l1 * l1 - l2 * l2) / (2 * l1 * l2)
    if abs(D) > 1.0:
        raise LegReachError("foot out of reach")
    q2 = -np.arccos(D)
    q1 = np.arctan2(-x, -z) - np.arctan2(l2 * np.sin(q2), l1 + l2 * np.cos(q2))
    return np.array([q0, q1, q2])


def leg_dynamics(model: KinematicModel, leg: int, q_leg, qd_leg, gravity_B):
    """Fixed-base leg mass matrix and bias torques (Coriolis + gravity)."""
    chain = model.leg_chain(leg)
    q = np.asarray(q_leg, dtype=float)
    return chain.mass_matrix(q), chain.bias(q, np.asarray(qd_leg, dtype=float), gravity_B)


# ---------------------------------------------------------------------------- floating base


def floating_base_mass_matrix(model: KinematicModel, q_arm) -> np.ndarray:
    """12x12 inertia of base (body twist) plus arm joints; legs are massless here.

    The upper-left 6x6 block is the composite inertia of the base with the
    arm locked; the upper-right block ``F`` couples base twist and arm rates.
    """
    chain = model.arm_chain()
    coms, Rs, Jv, Jw = chain.com_jacobians(np.asarray(q_arm, dtype=float))
    M = np.zeros((12, 12))
    M[:3, :3] = model.base_mass * np.eye(3)
    M[3:6, 3:6] = model.base_inertia
    for i, lk in enumerate(chain.links):
        c = coms[i] + model.t_bs
        Av = np.hstack([np.eye(3), -skew(c), Jv[i]])
        Aw = np.hstack([np.zeros((3, 3)), np.eye(3), Jw[i]])
        Iw = Rs[i] @ lk.inertia @ Rs[i].T
        M += lk.mass * Av.T @ Av + Aw.T @ Iw @ Aw
    return 0.5 * (M + M.T)


def floating_base_bias(model: KinematicModel, q_arm, qd_arm, v_b, w_b, gravity_B, base_gravity=True):
    """Bias forces ``(n_base (6,), n_arm (6,))`` at zero accelerations.

    ``gravity_B`` is the gravity vector in base coordinates. The base entry
    is the body-frame wrench (force, moment about the base origin);
    ``base_gravity`` toggles the base body's own weight.
    """
    chain = model.arm_chain()
    v_b = np.asarray(v_b, dtype=float)
    w_b = np.asarray(w_b, dtype=float)
    g = np.asarray(gravity_B, dtype=float)
    t = model.t_bs
    v_s = v_b + np.cross(w_b, t)
    # classical acceleration of the mount origin when the body twist is constant
    a_s = np.cross(w_b, v_b) + np.cross(w_b, np.cross(w_b, t))
    f, mom, tau = chain.rnea(q_arm, qd_arm, np.zeros(N_ARM), g, base_twist=(v_s, w_b), base_accel=(a_s, np.zeros(3)))
    mb = model.base_mass
    Ib = model.base_inertia
    fb = mb * np.cross(w_b, v_b) + f
    if base_gravity:
        fb = fb - mb * g
    mb_mom = np.cross(w_b, Ib @ w_b) + mom + np.cross(t, f)
    return np.concatenate([fb, mb_mom]), tau


def coupled_arm_dynamics(model: KinematicModel, state: RobotState, gravity: float = GRAVITY):
    """Arm inertia and bias reduced through the floating base.

    ``M_fl = M_arm - F^T M_B^-1 F`` and ``n_fl = n_arm - F^T M_B^-1 n_B``.
    ``M_B`` is the composite base block (base plus locked arm) and ``n_B``
    excludes gravity, because the stance legs carry the weight; ``n_arm``
    keeps gravity so ``n_fl`` contains the gravity-compensation torques.

    Raises:
        ModelError: if ``M_fl`` is not symmetric positive definite.
    """
    M = floating_base_mass_matrix(model, state.q_arm)
    v_b, w_b = state.body_twist()
    g_B = state.R.T @ np.array([0.0, 0.0, -gravity])
    n_B, _ = floating_base_bias(model, state.q_arm, state.qd_arm, v_b, w_b, np.zeros(3), base_gravity=False)
    _, n_arm = floating_base_bias(model, state.q_arm, state.qd_arm, v_b, w_b, g_B)
    M_B = M[:6, :6]
    F = M[:6, 6:]
    M_arm = M[6:, 6:]
    X = np.linalg.solve(M_B, F)
    M_fl = M_arm - F.T @ X
    M_fl = 0.5 * (M_fl + M_fl.T)
    n_fl = n_arm - X.T @ n_B
    if not np.all(np.isfinite(M_fl)) or np.linalg.eigvalsh(M_fl)[0] <= 0:
        raise ModelError("reduced arm inertia is not positive definite")
    return M_fl, n_fl
