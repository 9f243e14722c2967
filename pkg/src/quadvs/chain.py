"""Serial chains of revolute joints: kinematics, Jacobians and inverse dynamics.

All quantities returned by :class:`SerialChain` are expressed in the chain's
base frame. Twists are stacked ``[linear; angular]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _cross(a, b):
    return np.array(
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    )


def _cross_rows(a, b):
    """Row-wise cross product of ``(n, 3)`` arrays (cheaper than ``np.cross`` for small n)."""
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., 0] = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    out[..., 1] = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    out[..., 2] = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return out


@dataclass(frozen=True)
class Joint:
    """Revolute joint: fixed offset from the parent frame, then a rotation about ``axis``."""

    origin: np.ndarray
    axis: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))
        object.__setattr__(self, "axis", axis / np.linalg.norm(axis))
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float))


@dataclass(frozen=True)
class Link:
    """Rigid link attached after a joint. ``inertia`` is about the CoM, link axes."""

    mass: float
    com: np.ndarray
    inertia: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "com", np.asarray(self.com, dtype=float))
        object.__setattr__(self, "inertia", np.asarray(self.inertia, dtype=float))


def box_inertia(mass: float, size) -> np.ndarray:
    """Inertia tensor of a solid box about its center."""
    a, b, c = size
    return mass / 12.0 * np.diag([b * b + c * c, a * a + c * c, a * a + b * b])


class SerialChain:
    """Open chain of revolute joints ending in a tool frame.

    Args:
        joints: joint list, base to tip.
        links: one link per joint (the body moved by that joint).
        tip_offset: tool-frame origin in the last link frame.
        tip_rotation: tool-frame orientation in the last link frame.
    """

    def __init__(self, joints, links, tip_offset, tip_rotation=None):
        if len(joints) != len(links):
            raise ValueError("need exactly one link per joint")
        self.joints = tuple(joints)
        self.links = tuple(links)
        self.tip_offset = np.asarray(tip_offset, dtype=float)
        self.tip_rotation = np.eye(3) if tip_rotation is None else np.asarray(tip_rotation, float)
        self.dof = len(self.joints)
        # Rodrigues factors of each joint axis, premultiplied by the fixed joint rotation
        self._K = []
        for jt in self.joints:
            a = jt.axis
            K = np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])
            self._K.append((jt.rotation, jt.rotation @ K, jt.rotation @ K @ K))
        self._frames_key = None
        self._frames = None

    # ------------------------------------------------------------------ kinematics
    def link_frames(self, q):
        """Orientations ``(n, 3, 3)`` and origins ``(n, 3)`` of each link frame.

        The last result is cached because one dynamics evaluation asks for
        the same configuration several times; callers must not mutate it.
        """
        q = np.asarray(q, dtype=float)
        key = q.tobytes()
        if key == self._frames_key:
            return self._frames
        Rs = np.empty((self.dof, 3, 3))
        ps = np.empty((self.dof, 3))
        R = np.eye(3)
        p = np.zeros(3)
        for i, jt in enumerate(self.joints):
            p = p + R @ jt.origin
            R0, K, K2 = self._K[i]
            R = R @ (R0 + np.sin(q[i]) * K + (1.0 - np.cos(q[i])) * K2)
            Rs[i] = R
            ps[i] = p
        Rs.flags.writeable = False
        ps.flags.writeable = False
        self._frames_key, self._frames = key, (Rs, ps)
        return Rs, ps

    def forward_kinematics(self, q):
        """Tool frame ``(R, p)`` in the chain base frame."""
        Rs, ps = self.link_frames(q)
        return Rs[-1] @ self.tip_rotation, ps[-1] + Rs[-1] @ self.tip_offset

    def _axes(self, Rs):
        # axis of joint i expressed in base coordinates; the joint rotation
        # leaves its own axis unchanged so the post-rotation frame can be used
        return np.array([Rs[i] @ jt.axis for i, jt in enumerate(self.joints)])

    def jacobian(self, q):
        """Geometric Jacobian ``(6, n)`` of the tool origin, ``[linear; angular]``."""
        Rs, ps = self.link_frames(q)
        tip = ps[-1] + Rs[-1] @ self.tip_offset
        z = self._axes(Rs)
        J = np.empty((6, self.dof))
        J[:3] = _cross_rows(z, tip - ps).T
        J[3:] = z.T
        return J

    def com_jacobians(self, q):
        """Per-link CoM positions, orientations and Jacobians.

        Returns:
            coms ``(n, 3)``, Rs ``(n, 3, 3)``, Jv ``(n, 3, n)``, Jw ``(n, 3, n)``.
        """
        Rs, ps = self.link_frames(q)
        z = self._axes(Rs)
        n = self.dof
        coms = ps + np.einsum("nij,nj->ni", Rs, np.array([lk.com for lk in self.links]))
        Jv = np.zeros((n, 3, n))
        Jw = np.zeros((n, 3, n))
        for i in range(n):
            Jv[i, :, : i + 1] = _cross_rows(z[: i + 1], coms[i] - ps[: i + 1]).T
            Jw[i, :, : i + 1] = z[: i + 1].T
        return coms, Rs, Jv, Jw

    def mass_matrix(self, q):
        """Joint-space inertia for a fixed base."""
        _, Rs, Jv, Jw = self.com_jacobians(q)
        M = np.zeros((self.dof, self.dof))
        for i, lk in enumerate(self.links):
            Iw = Rs[i] @ lk.inertia @ Rs[i].T
            M += lk.mass * Jv[i].T @ Jv[i] + Jw[i].T @ Iw @ Jw[i]
        return M

    # ------------------------------------------------------------------ dynamics
    def rnea(self, q, qd, qdd, gravity, base_twist=None, base_accel=None):
        """Recursive Newton-Euler inverse dynamics.

        The chain base may move: ``base_twist = (v, w)`` and
        ``base_accel = (a, alpha)`` give the (classical) velocity and
        acceleration of the base origin, all in base-frame components.

        Returns:
            ``(force, moment, tau)``: the wrench the base must apply to the
            chain at its origin and the joint torques.
        """
        n = self.dof
        Rs, ps = self.link_frames(q)
        z = self._axes(Rs)
        g = np.asarray(gravity, dtype=float)
        w = np.zeros(3) if base_twist is None else np.asarray(base_twist[1], float)
        a = np.zeros(3) if base_accel is None else np.asarray(base_accel[0], float)
        al = np.zeros(3) if base_accel is None else np.asarray(base_accel[1], float)
        prev = np.zeros(3)
        ws, als, fs, ns = [], [], [], []
        coms = []
        for i in range(n):
            d = ps[i] - prev
            a = a + _cross(al, d) + _cross(w, _cross(w, d))
            al = al + z[i] * qdd[i] + _cross(w, z[i] * qd[i])
            w = w + z[i] * qd[i]
            c = Rs[i] @ self.links[i].com
            ac = a + _cross(al, c) + _cross(w, _cross(w, c))
            Iw = Rs[i] @ self.links[i].inertia @ Rs[i].T
            m = self.links[i].mass
            F = m * (ac - g)
            N = Iw @ al + _cross(w, Iw @ w) + _cross(c, F)
            ws.append(w)
            als.append(al)
            fs.append(F)
            ns.append(N)
            coms.append(c)
            prev = ps[i]
        tau = np.empty(n)
        f = np.zeros(3)
        mom = np.zeros(3)
        for i in range(n - 1, -1, -1):
            if i < n - 1:
                mom = mom + _cross(ps[i + 1] - ps[i], f)
            f = f + fs[i]
            mom = mom + ns[i]
            tau[i] = z[i] @ mom
        # moment about the chain base origin
        mom = mom + _cross(ps[0], f)
        return f, mom, tau

    def bias(self, q, qd, gravity):
        """Fixed-base Coriolis, centrifugal and gravity torques."""
        return self.rnea(q, qd, np.zeros(self.dof), gravity)[2]
