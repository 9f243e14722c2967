"""Robot parameter table: base, 6-DOF arm, 3-DOF legs and camera mount.

The numbers are a fixed, documented stand-in for a mid-size quadruped
(0.65 m x 0.30 m base) carrying a 4.4 kg six-joint arm and a downward-looking
camera on a short front mast. Every field can be overridden from the run
config; see ``docs/config.md``.

Frames (all right-handed):

* ``I`` inertial, z up.
* ``B`` base, x forward, y left, origin at the base CoM.
* ``S`` arm mount on top of the base; ``E`` arm tool frame.
* ``C`` camera, z along the optical axis, x to image right, y image down.

Leg order is FL, FR, RL, RR. Each leg has an abduction joint (about x), a hip
joint (about y) and a knee joint (about y).
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from .chain import Joint, Link, SerialChain, box_inertia

LEG_NAMES = ("FL", "FR", "RL", "RR")
LEG_SIDES = (1.0, -1.0, 1.0, -1.0)
GRAVITY = 9.81


class ModelParameterError(ValueError):
    """Inconsistent or physically invalid model parameters."""


@dataclass(frozen=True)
class ArmJointSpec:
    origin: tuple
    axis: tuple
    mass: float
    com: tuple
    inertia_diag: tuple


def _default_arm():
    # upper arm points up and the forearm points forward at q = 0
    return (
        ArmJointSpec((0.0, 0.0, 0.0), (0, 0, 1), 0.75, (0.0, 0.0, 0.06), (2.0e-3, 2.0e-3, 1.2e-3)),
        ArmJointSpec((0.0, 0.0, 0.12), (0, 1, 0), 1.00, (0.0, 0.0, 0.15), (8.5e-3, 8.5e-3, 1.0e-3)),
        ArmJointSpec((0.0, 0.0, 0.30), (0, 1, 0), 0.80, (0.12, 0.0, 0.0), (6.0e-4, 4.5e-3, 4.5e-3)),
        ArmJointSpec((0.25, 0.0, 0.0), (1, 0, 0), 0.50, (0.04, 0.0, 0.0), (3.0e-4, 6.0e-4, 6.0e-4)),
        ArmJointSpec((0.08, 0.0, 0.0), (0, 1, 0), 0.50, (0.04, 0.0, 0.0), (3.0e-4, 6.0e-4, 6.0e-4)),
        ArmJointSpec((0.08, 0.0, 0.0), (1, 0, 0), 0.85, (0.06, 0.0, 0.0), (6.0e-4, 1.5e-3, 1.5e-3)),
    )


_CAMERA_DOWN = ((0.0, -1.0, 0.0), (-1.0, 0.0, 0.0), (0.0, 0.0, -1.0))


@dataclass(frozen=True)
class KinematicModel:
    base_mass: float = 19.0
    base_size: tuple = (0.65, 0.30, 0.15)
    arm_mount: tuple = (0.15, 0.0, 0.07)
    arm_joints: tuple = field(default_factory=_default_arm)
    arm_tip: tuple = (0.12, 0.0, 0.0)
    # camera orientation in B as a rotation matrix (rows); default looks straight down
    camera_position: tuple = (0.45, 0.0, 0.30)
    camera_rotation: tuple = _CAMERA_DOWN
    hip_offset: tuple = (0.24, 0.05, 0.0)
    abad_length: float = 0.083
    thigh_length: float = 0.25
    calf_length: float = 0.25
    leg_masses: tuple = (0.5, 0.6, 0.15)
    nominal_leg_angles: tuple = (0.0, 0.75, -1.5)

    def __post_init__(self):
        lengths = (self.abad_length, self.thigh_length, self.calf_length)
        if min(lengths) <= 0 or min(self.base_size) <= 0:
            raise ModelParameterError("link lengths and base size must be positive")
        if self.base_mass <= 0 or any(j.mass <= 0 for j in self.arm_joints):
            raise ModelParameterError("masses must be positive")
        if len(self.arm_joints) != 6:
            raise ModelParameterError("the arm must have exactly 6 joints")
        for j in self.arm_joints:
            if min(j.inertia_diag) <= 0:
                raise ModelParameterError("arm link inertia must be positive definite")
        R = np.asarray(self.camera_rotation, dtype=float)
        if not (np.allclose(R.T @ R, np.eye(3), atol=1e-9) and np.linalg.det(R) > 0):
            raise ModelParameterError("camera_rotation is not a rotation matrix")

    # -------------------------------------------------------------- derived
    @property
    def R_bc(self) -> np.ndarray:
        return np.asarray(self.camera_rotation, dtype=float)

    @property
    def t_bc(self) -> np.ndarray:
        return np.asarray(self.camera_position, dtype=float)

    @property
    def t_bs(self) -> np.ndarray:
        return np.asarray(self.arm_mount, dtype=float)

    @property
    def base_inertia(self) -> np.ndarray:
        return box_inertia(self.base_mass, self.base_size)

    @property
    def arm_mass(self) -> float:
        return float(sum(j.mass for j in self.arm_joints))

    @property
    def total_mass(self) -> float:
        return self.base_mass + self.arm_mass

    def arm_chain(self) -> SerialChain:
        try:
            return self._arm_chain
        except AttributeError:
            pass
        joints = [Joint(j.origin, j.axis) for j in self.arm_joints]
        links = [Link(j.mass, j.com, np.diag(j.inertia_diag)) for j in self.arm_joints]
        chain = SerialChain(joints, links, self.arm_tip)
        object.__setattr__(self, "_arm_chain", chain)
        return chain

    def hip_position(self, leg: int) -> np.ndarray:
        hx, hy, hz = self.hip_offset
        sx = 1.0 if leg in (0, 1) else -1.0
        return np.array([sx * hx, LEG_SIDES[leg] * hy, hz])

    def leg_chain(self, leg: int) -> SerialChain:
        cache = self.__dict__.setdefault("_leg_chains", {})
        if leg in cache:
            return cache[leg]
        side = LEG_SIDES[leg]
        m0, m1, m2 = self.leg_masses
        l0, l1, l2 = self.abad_length, self.thigh_length, self.calf_length
        joints = [
            Joint(self.hip_position(leg), (1, 0, 0)),
            Joint((0.0, side * l0, 0.0), (0, 1, 0)),
            Joint((0.0, 0.0, -l1), (0, 1, 0)),
        ]
        links = [
            Link(m0, (0.0, side * l0 / 2, 0.0), box_inertia(m0, (0.08, l0, 0.06))),
            Link(m1, (0.0, 0.0, -l1 / 2), box_inertia(m1, (0.04, 0.04, l1))),
            Link(m2, (0.0, 0.0, -l2 / 2), box_inertia(m2, (0.02, 0.02, l2))),
        ]
        cache[leg] = SerialChain(joints, links, (0.0, 0.0, -l2))
        return cache[leg]

    def nominal_height(self) -> float:
        """Base height above flat ground with all legs at ``nominal_leg_angles``."""
        foot = self.leg_chain(0).forward_kinematics(np.asarray(self.nominal_leg_angles))[1]
        return float(-foot[2])

    def composite_inertia(self, q_arm) -> np.ndarray:
        """Base inertia plus the arm links locked at ``q_arm``, about the base origin."""
        chain = self.arm_chain()
        coms, Rs, _, _ = chain.com_jacobians(np.asarray(q_arm, dtype=float))
        I = self.base_inertia.copy()
        for c, R, lk in zip(coms, Rs, chain.links):
            r = c + self.t_bs
            I += R @ lk.inertia @ R.T + lk.mass * (r @ r * np.eye(3) - np.outer(r, r))
        return I

    # -------------------------------------------------------------- config
    @classmethod
    def from_dict(cls, data: dict) -> "KinematicModel":
        """Build from a config mapping; unknown keys are rejected."""
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ModelParameterError(f"unknown model keys: {sorted(unknown)}")
        kw = {}
        for k, v in data.items():
            if k == "arm_joints":
                kw[k] = tuple(_arm_joint_from_dict(j) for j in v)
            elif isinstance(v, list):
                kw[k] = tuple(tuple(x) if isinstance(x, list) else x for x in v)
            else:
                kw[k] = v
        return cls(**kw)


def _arm_joint_from_dict(d: dict) -> ArmJointSpec:
    names = {f.name for f in fields(ArmJointSpec)}
    unknown = set(d) - names
    if unknown or set(d) != names:
        raise ModelParameterError(f"arm joint entries need exactly {sorted(names)}")
    return ArmJointSpec(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})
