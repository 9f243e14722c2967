"""Spherical image features: projection, centroids, interaction gains, visual error.

Target points are only seen through the camera, so their centroid carries no
interaction gain (depths are unknown). The manipulator is represented by
virtual points whose ranges follow from the arm kinematics, so its centroid
comes with ``L_t``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .rotations import skew


class InsufficientFeaturesError(ValueError):
    """Fewer than two feature points."""


class DegenerateRangeError(ValueError):
    """A virtual point coincides with the projection center."""


@dataclass(frozen=True)
class CentroidFeature:
    h: np.ndarray
    L: Optional[np.ndarray] = None  # None when ranges are unknown


def projector(s) -> np.ndarray:
    """Tangent-plane projector ``I - s s^T``."""
    s = np.asarray(s, dtype=float)
    return np.eye(3) - np.outer(s, s)


def project_to_sphere(q) -> np.ndarray:
    """Unit vector through the normalized image point ``q = (x, y)``."""
    v = np.array([q[0], q[1], 1.0])
    return v / np.linalg.norm(v)


def target_centroid(points) -> CentroidFeature:
    """Centroid of the sphere points of the observed target.

    ``points`` may hold normalized image points ``(x, y)`` or unit vectors.
    """
    pts = [np.asarray(p, dtype=float) for p in points]
    if len(pts) < 2:
        raise InsufficientFeaturesError("need at least two feature points")
    s = np.array([project_to_sphere(p) if p.shape == (2,) else p for p in pts])
    return CentroidFeature(s.mean(axis=0))


def centroid_from_points(Q) -> CentroidFeature:
    """Centroid and interaction gain of 3D points expressed in a camera frame."""
    Q = np.asarray(Q, dtype=float)
    if Q.shape[0] < 2:
        raise InsufficientFeaturesError("need at least two feature points")
    r = np.linalg.norm(Q, axis=1)
    if np.any(r < 1e-6):
        raise DegenerateRangeError("feature point at the projection center")
    s = Q / r[:, None]
    h = s.mean(axis=0)
    # mean of (I - s s^T) / r
    L = (np.eye(3) * np.sum(1.0 / r) - np.einsum("i,ij,ik->jk", 1.0 / r, s, s)) / len(r)
    return CentroidFeature(h, 0.5 * (L + L.T))


@dataclass(frozen=True)
class VirtualPointSet:
    """Virtual manipulator points ``Q_ti = O_e + offsets_i`` in the camera frame.

    The offsets are held fixed in the camera frame, so they translate with
    the tool origin but do not turn with the tool.
    """

    offsets: np.ndarray

    def __post_init__(self):
        off = np.asarray(self.offsets, dtype=float)
        if off.ndim != 2 or off.shape[1] != 3 or off.shape[0] < 2:
            raise InsufficientFeaturesError("need at least two 3D offsets")
        object.__setattr__(self, "offsets", off)

    def points(self, O_e) -> np.ndarray:
        return np.asarray(O_e, dtype=float)[None, :] + self.offsets


def virtual_centroid(vp: VirtualPointSet, O_e, R_virtual) -> CentroidFeature:
    """Centroid ``h_t`` and gain ``L_t`` of the virtual points remapped to the leveled frame.

    Args:
        vp: virtual point offsets.
        O_e: tool origin in the real camera frame.
        R_virtual: rotation of the real camera frame w.r.t. the leveled frame
            (see :func:`quadvs.rotations.virtual_plane_rotation`).
    """
    Q = vp.points(O_e)
    Qv = Q @ np.asarray(R_virtual)  # row-wise R^T Q
    return centroid_from_points(Qv)


def point_jacobian(R_cs) -> np.ndarray:
    """Virtual-point Jacobian ``J_t`` (3x6) mapping the tool twist in S to ``dQ/dt``.

    With camera-fixed offsets only the tool's linear velocity moves the
    points, so the angular block is zero.
    """
    J = np.zeros((3, 6))
    J[:, :3] = R_cs
    return J


def visual_error(h_o, h_t) -> np.ndarray:
    return np.asarray(h_o, dtype=float) - np.asarray(h_t, dtype=float)


def target_centroid_rate(h_o, L_o, Omega_c, v_c, v_T) -> np.ndarray:
    """Rate of the target centroid for camera twist ``(v_c, Omega_c)`` and target velocity ``v_T``."""
    return -skew(Omega_c) @ h_o - L_o @ (np.asarray(v_c) - np.asarray(v_T))


def virtual_centroid_rate(h_t, L_t, Omega_c, R_virtual, J_t, J_e, qd_arm) -> np.ndarray:
    return -skew(Omega_c) @ h_t + L_t @ R_virtual.T @ J_t @ J_e @ np.asarray(qd_arm)


def error_rate_oracle(e, Omega_c, v_c, v_T, L_o, L_t, R_virtual, J_t, J_e, qd_arm) -> np.ndarray:
    """Visual-error rate for the given motion; needs the true target gain ``L_o``."""
    return (
        -skew(Omega_c) @ e
        - L_o @ (np.asarray(v_c) - np.asarray(v_T))
        - L_t @ R_virtual.T @ J_t @ J_e @ np.asarray(qd_arm)
    )
