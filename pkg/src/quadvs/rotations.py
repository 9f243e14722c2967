"""Rotation helpers: ZYX Euler angles, skew operator, SO(3) exp/log.

Euler angles are always handled as ``(yaw, pitch, roll)`` with
``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)``.
"""

from __future__ import annotations

import numpy as np

PITCH_LIMIT = np.pi / 2 - 1e-6


class SingularAttitudeError(ValueError):
    """Pitch too close to +-pi/2 for a ZYX Euler parameterization."""


def rot_x(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def skew(v) -> np.ndarray:
    """Matrix ``[v]x`` such that ``skew(v) @ w == np.cross(v, w)``."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def euler_to_rotation(angles) -> np.ndarray:
    """Rotation matrix of ZYX Euler angles ``(yaw, pitch, roll)``.

    Raises:
        SingularAttitudeError: if ``|pitch| >= pi/2 - 1e-6``.
    """
    yaw, pitch, roll = angles
    if abs(pitch) >= PITCH_LIMIT:
        raise SingularAttitudeError(f"pitch {pitch!r} is at the ZYX singularity")
    cy, sy = np.cos(yaw), np.sin(yaw)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cr, sr = np.cos(roll), np.sin(roll)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def rotation_to_euler(R: np.ndarray) -> np.ndarray:
    """Inverse of :func:`euler_to_rotation`; returns ``(yaw, pitch, roll)``."""
    pitch = -np.arcsin(np.clip(R[2, 0], -1.0, 1.0))
    if abs(pitch) >= PITCH_LIMIT:
        raise SingularAttitudeError("rotation is at the ZYX singularity")
    yaw = np.arctan2(R[1, 0], R[0, 0])
    roll = np.arctan2(R[2, 1], R[2, 2])
    return np.array([yaw, pitch, roll])


def euler_rates_to_angular_velocity(angles, rates) -> np.ndarray:
    """World-frame angular velocity from ZYX Euler angles and their rates."""
    yaw, pitch, _ = angles
    dyaw, dpitch, droll = rates
    cy, sy = np.cos(yaw), np.sin(yaw)
    cp, sp = np.cos(pitch), np.sin(pitch)
    # columns: world images of z (yaw), Rz*y (pitch), Rz*Ry*x (roll)
    E = np.array([[0.0, -sy, cy * cp], [0.0, cy, sy * cp], [1.0, 0.0, -sp]])
    return E @ np.array([dyaw, dpitch, droll])


def exp_so3(w) -> np.ndarray:
    """Rodrigues formula for ``expm(skew(w))``."""
    w = np.asarray(w, dtype=float)
    th = np.linalg.norm(w)
    K = skew(w)
    if th < 1e-8:
        return np.eye(3) + K + 0.5 * K @ K
    return np.eye(3) + np.sin(th) / th * K + (1 - np.cos(th)) / th**2 * K @ K


def log_so3(R: np.ndarray) -> np.ndarray:
    """Rotation vector ``w`` with ``exp_so3(w) == R`` (angle in [0, pi))."""
    c = np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)
    th = np.arccos(c)
    v = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if th < 1e-8:
        return 0.5 * v
    if np.pi - th < 1e-6:
        # near pi: take the axis from the symmetric part
        B = (R + np.eye(3)) / 2.0
        axis = B[:, np.argmax(np.diag(B))]
        axis = axis / np.linalg.norm(axis)
        return th * axis
    return th / (2 * np.sin(th)) * v


def virtual_plane_rotation(angles, R_base_cam: np.ndarray) -> np.ndarray:
    """Rotation of the real camera frame w.r.t. the leveled (virtual) camera frame.

    The virtual camera is rigidly attached to a copy of the base whose roll
    and pitch are zero and whose yaw is the real yaw. With ``R_ib`` the real
    base attitude the returned matrix is ``R_ic'^T R_ic``, i.e. it maps
    real-camera coordinates to virtual-camera coordinates. Virtual points are
    remapped with its transpose: ``Q' = R.T @ Q``.

    Args:
        angles: base ZYX Euler angles ``(yaw, pitch, roll)``.
        R_base_cam: camera orientation in the base frame.
    """
    yaw, pitch, roll = angles
    # Rz(yaw)^T R_ib = Ry(pitch) Rx(roll)
    tilt = rot_y(pitch) @ rot_x(roll)
    return R_base_cam.T @ tilt @ R_base_cam
