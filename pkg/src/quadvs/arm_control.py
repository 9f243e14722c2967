"""Computed-torque control of the arm with floating-base coupling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import ModelError, RobotState, coupled_arm_dynamics
from .model import GRAVITY, KinematicModel


@dataclass(frozen=True)
class ArmGains:
    kp: tuple = (100.0,) * 6
    kd: tuple = (20.0,) * 6
    torque_limit: float = 30.0

    def __post_init__(self):
        kp = np.broadcast_to(np.asarray(self.kp, dtype=float), (6,))
        kd = np.broadcast_to(np.asarray(self.kd, dtype=float), (6,))
        if np.any(kp <= 0) or np.any(kd <= 0) or self.torque_limit <= 0:
            raise ValueError("arm gains and torque limit must be positive")
        object.__setattr__(self, "kp", tuple(kp))
        object.__setattr__(self, "kd", tuple(kd))


@dataclass
class ArmCommand:
    tau: np.ndarray
    saturated: bool = False
    fault: bool = False


def arm_torque(model: KinematicModel, q_d, qd_d, qdd_d, state: RobotState, gains: ArmGains = ArmGains(),
               gravity: float = GRAVITY) -> ArmCommand:
    """``tau = M_fl (qdd_d + Kd (qd_d - qd) + Kp (q_d - q)) + n_fl``, saturated per joint.

    Non-finite dynamics terms yield a zero-torque command with ``fault`` set.
    """
    try:
        M_fl, n_fl = coupled_arm_dynamics(model, state, gravity)
    except (ModelError, np.linalg.LinAlgError):
        return ArmCommand(np.zeros(6), fault=True)
    if not (np.all(np.isfinite(M_fl)) and np.all(np.isfinite(n_fl))):
        return ArmCommand(np.zeros(6), fault=True)
    e = np.asarray(q_d, dtype=float) - state.q_arm
    ed = np.asarray(qd_d, dtype=float) - state.qd_arm
    qdd = np.asarray(qdd_d, dtype=float) + np.asarray(gains.kd) * ed + np.asarray(gains.kp) * e
    tau = M_fl @ qdd + n_fl
    lim = gains.torque_limit
    sat = bool(np.any(np.abs(tau) > lim))
    return ArmCommand(np.clip(tau, -lim, lim), saturated=sat)
