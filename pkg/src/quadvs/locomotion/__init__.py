"""Trot gait, footstep planning, single-rigid-body MPC and leg torque laws."""

from .gait import GaitSchedule, gait_contacts, raibert_footstep, swing_trajectory
from .legs import LegCommand, LegGains, leg_torque, operational_space_inertia
from .mpc import MpcSolution, MpcWeights, SrbModel, build_qp, srb_mpc, srb_state

__all__ = [
    "GaitSchedule",
    "gait_contacts",
    "raibert_footstep",
    "swing_trajectory",
    "LegCommand",
    "LegGains",
    "leg_torque",
    "operational_space_inertia",
    "MpcSolution",
    "MpcWeights",
    "SrbModel",
    "build_qp",
    "srb_mpc",
    "srb_state",
]
