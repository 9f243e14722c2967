"""Reference generation for the base and the arm from the visual error.

The base velocity reference makes the camera move with the estimated target
velocity plus a proportional correction of the error. The arm reference
removes the remaining feature error through a pseudo-inverse of the
virtual-feature Jacobian.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rotations import skew

SINGULAR_TOL = 1e-8


class NearSingularError(RuntimeError):
    """Composed arm feature Jacobian lost rank."""


def _diag(v, n) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        v = np.full(n, float(v))
    if v.shape != (n,) or np.any(v <= 0):
        raise ValueError(f"gain must be a positive scalar or {n}-vector")
    return v


@dataclass(frozen=True)
class ServoGains:
    K_b: tuple = (0.8, 0.8, 0.8)
    K_a: tuple = (1.0, 1.0, 1.0)
    activation_angle: float = 0.5  # rad between h_o and h_t before the arm moves
    max_joint_rate: float = 2.0  # rad/s

    def __post_init__(self):
        object.__setattr__(self, "K_b", tuple(_diag(self.K_b, 3)))
        object.__setattr__(self, "K_a", tuple(_diag(self.K_a, 3)))


def base_reference_velocity(e, v_T_c, omega_B_body, R_IC, R_IB, t_BC, gains: ServoGains) -> np.ndarray:
    """Base linear velocity reference in the inertial frame.

    ``omega_B_body`` is the base angular velocity in body coordinates; the
    last term removes the lever-arm velocity of the camera.
    """
    Kb = np.diag(gains.K_b)
    return R_IC @ (Kb @ np.asarray(e) + np.asarray(v_T_c)) + R_IB @ skew(t_BC) @ np.asarray(omega_B_body)


def arm_feature_matrix(L_t, R_virtual, J_t, J_e) -> np.ndarray:
    """``L_t R_v^T J_t J_e``: joint rates to virtual-centroid rate (up to the rotation term)."""
    return np.asarray(L_t) @ np.asarray(R_virtual).T @ np.asarray(J_t) @ np.asarray(J_e)


def arm_reference_rate(e, L_t, R_virtual, J_t, J_e, gains: ServoGains) -> np.ndarray:
    """Minimum-norm joint rates producing the feature rate ``K_a e``.

    Raises:
        NearSingularError: if the smallest singular value is below 1e-8.
    """
    A = arm_feature_matrix(L_t, R_virtual, J_t, J_e)
    U, S, Vt = np.linalg.svd(A, full_matrices=False)
    if S[-1] < SINGULAR_TOL:
        raise NearSingularError(f"smallest singular value {S[-1]:.3g}")
    rhs = np.diag(gains.K_a) @ np.asarray(e, dtype=float)
    return Vt.T @ ((U.T @ rhs) / S)


def arm_active(h_o, h_t, gains: ServoGains) -> bool:
    """Arm gating: the target centroid direction lies within the activation cone."""
    c = np.dot(h_o, h_t) / (np.linalg.norm(h_o) * np.linalg.norm(h_t))
    return bool(np.arccos(np.clip(c, -1.0, 1.0)) <= gains.activation_angle)


def clamp_rates(qd, limit: float) -> np.ndarray:
    """Uniformly scale ``qd`` so that no entry exceeds ``limit``."""
    m = np.max(np.abs(qd))
    return qd * (limit / m) if m > limit else qd


@dataclass
class ReferenceIntegrator:
    """Accumulates velocity references into position/attitude references.

    Desired roll, pitch and angular velocity stay zero; desired yaw is held
    at its initial value.
    """

    p_d: np.ndarray
    yaw0: float
    q_arm_d: np.ndarray
    qd_prev: np.ndarray = None
    qdd_arm_d: np.ndarray = field(default_factory=lambda: np.zeros(6))
    v_d: np.ndarray = field(default_factory=lambda: np.zeros(3))
    qd_arm_d: np.ndarray = field(default_factory=lambda: np.zeros(6))

    def __post_init__(self):
        self.p_d = np.array(self.p_d, dtype=float)
        self.q_arm_d = np.array(self.q_arm_d, dtype=float)

    def step(self, v_B_d, qd_arm_d, dt: float) -> None:
        v_B_d = np.asarray(v_B_d, dtype=float)
        qd = np.asarray(qd_arm_d, dtype=float)
        self.p_d = self.p_d + dt * v_B_d
        self.q_arm_d = self.q_arm_d + dt * qd
        self.qdd_arm_d = np.zeros(6) if self.qd_prev is None else (qd - self.qd_prev) / dt
        self.qd_prev = qd.copy()
        self.v_d = v_B_d.copy()
        self.qd_arm_d = qd.copy()

    @property
    def euler_d(self) -> np.ndarray:
        return np.array([self.yaw0, 0.0, 0.0])

    def horizon(self, n: int, dt_mpc: float) -> np.ndarray:
        """Reference states ``(n, 12)`` ``[roll, pitch, yaw, p, w, v]`` at constant ``v_d``."""
        X = np.zeros((n, 12))
        for k in range(n):
            X[k, 2] = self.yaw0
            X[k, 3:6] = self.p_d + (k + 1) * dt_mpc * self.v_d
            X[k, 9:12] = self.v_d
        return X


def integrate_reference(v_stream, qd_stream, dt: float, p0=None, q0=None, yaw0: float = 0.0):
    """Integrate whole reference streams; returns ``(p_d, q_arm_d, qdd_arm_d)`` arrays."""
    v_stream = np.atleast_2d(np.asarray(v_stream, dtype=float))
    qd_stream = np.atleast_2d(np.asarray(qd_stream, dtype=float))
    integ = ReferenceIntegrator(np.zeros(3) if p0 is None else p0, yaw0,
                                np.zeros(qd_stream.shape[1]) if q0 is None else q0)
    P, Q, A = [], [], []
    for v, qd in zip(v_stream, qd_stream):
        integ.step(v, qd, dt)
        P.append(integ.p_d.copy())
        Q.append(integ.q_arm_d.copy())
        A.append(integ.qdd_arm_d.copy())
    return np.array(P), np.array(Q), np.array(A)
