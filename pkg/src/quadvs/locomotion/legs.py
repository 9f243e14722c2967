"""Joint torque laws for stance and swing legs.

Both modes share a Cartesian PD term mapped through the foot Jacobian. Stance
legs add the MPC force; swing legs add an operational-space feedforward built
from the leg's own inertia.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..kinematics import leg_dynamics, leg_jacobian_rate, leg_kinematics
from ..model import KinematicModel

LAMBDA_COND_LIMIT = 1e8


@dataclass(frozen=True)
class LegGains:
    kp_swing: tuple = (400.0, 400.0, 400.0)
    kd_swing: tuple = (15.0, 15.0, 15.0)
    kp_stance: tuple = (0.0, 0.0, 0.0)
    kd_stance: tuple = (0.0, 0.0, 0.0)
    swing_height: float = 0.08
    k_step: float = 0.03


@dataclass
class LegCommand:
    tau: np.ndarray
    damped: bool = False  # operational-space inertia needed the damped fallback


def operational_space_inertia(J, M, damping: float = 1e-6):
    """``Lambda = (J M^-1 J^T)^-1``, with a damped inverse when ill-conditioned."""
    G = J @ np.linalg.solve(M, J.T)
    if np.linalg.cond(G) < LAMBDA_COND_LIMIT:
        return np.linalg.inv(G), False
    return np.linalg.inv(G + damping * np.eye(3)), True


def leg_torque(model: KinematicModel, leg: int, mode: str, q_leg, qd_leg, foot_ref, foot_vel_ref,
               accel_ref, R_IB, f_i, gains: LegGains = LegGains(), gravity_B=None) -> LegCommand:
    """Joint torques for one leg.

    Args:
        mode: ``"stance"`` or ``"swing"``.
        foot_ref, foot_vel_ref, accel_ref: foot references in the base frame.
        R_IB: base attitude.
        f_i: world-frame force the foot should push on the ground with
            (the negated ground-reaction force); used in stance only.
        gravity_B: gravity in base coordinates for the swing-leg bias.
    """
    q = np.asarray(q_leg, dtype=float)
    qd = np.asarray(qd_leg, dtype=float)
    p, J = leg_kinematics(model, leg, q)
    v = J @ qd
    if mode == "stance":
        kp, kd = np.asarray(gains.kp_stance), np.asarray(gains.kd_stance)
    elif mode == "swing":
        kp, kd = np.asarray(gains.kp_swing), np.asarray(gains.kd_swing)
    else:
        raise ValueError(f"unknown leg mode {mode!r}")
    force = kp * (np.asarray(foot_ref) - p) + kd * (np.asarray(foot_vel_ref) - v)
    tau = J.T @ force
    damped = False
    if mode == "stance":
        tau = tau + J.T @ (np.asarray(R_IB).T @ np.asarray(f_i, dtype=float))
    else:
        g_B = np.zeros(3) if gravity_B is None else gravity_B
        M, n = leg_dynamics(model, leg, q, qd, g_B)
        Lam, damped = operational_space_inertia(J, M)
        Jdot = leg_jacobian_rate(model, leg, q, qd)
        tau = tau + J.T @ Lam @ (np.asarray(accel_ref) - Jdot @ qd) + n
    return LegCommand(tau, damped)
