"""Single-rigid-body model predictive control of ground-reaction forces.

State (13): ``[roll, pitch, yaw, p (3), w (3, world), v (3, world), g]``
with the gravity state fixed at ``-9.81``. The Euler-rate map is linearized
about the current yaw, the foot lever arms are frozen over the horizon and
the model is discretized exactly with a matrix exponential. The states are
eliminated (condensed form) and swing-foot forces are dropped, leaving a
dense QP in the stance forces only. It is solved with ``quadprog``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import quadprog
from scipy.linalg import expm

from ..model import GRAVITY
from ..rotations import rot_z, skew

N_STATE = 13

DEFAULT_Q = (10.0, 10.0, 10.0, 2.0, 2.0, 50.0, 1.0, 1.0, 0.3, 0.2, 0.2, 0.1, 0.0)


class MpcInfeasibleError(RuntimeError):
    """The QP was infeasible; carries the solver message."""


@dataclass(frozen=True)
class SrbModel:
    mass: float
    inertia: np.ndarray  # body frame, about the CoM
    gravity: float = GRAVITY
    mu: float = 0.5

    def __post_init__(self):
        I = np.asarray(self.inertia, dtype=float)
        object.__setattr__(self, "inertia", I)
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if not np.allclose(I, I.T) or np.linalg.eigvalsh(I)[0] <= 0:
            raise ValueError("inertia must be symmetric positive definite")


@dataclass(frozen=True)
class MpcWeights:
    horizon: int = 10
    dt: float = 0.03
    Q: tuple = DEFAULT_Q
    R: float = 1e-5
    f_min: float = 0.0
    f_max_factor: float = 2.0  # f_max = factor * m * g per foot
    max_iter: int = 500

    def __post_init__(self):
        if self.horizon < 1 or self.dt <= 0:
            raise ValueError("horizon must be >= 1 and dt positive")
        if len(self.Q) != N_STATE or min(self.Q) < 0 or self.R <= 0:
            raise ValueError("Q needs 13 non-negative entries and R must be positive")


@dataclass
class MpcSolution:
    forces: np.ndarray  # (N, 4, 3) world-frame ground-reaction forces
    status: str = "optimal"  # optimal | stale | idle
    kkt_residual: float = 0.0
    constraint_residual: float = 0.0
    iterations: int = 0
    objective: float = 0.0
    solve_time: float = 0.0
    stale: bool = False

    @property
    def first(self) -> np.ndarray:
        return self.forces[0]

    def shifted(self) -> "MpcSolution":
        """Previous plan advanced by one step (last step repeated), flagged stale."""
        f = np.concatenate([self.forces[1:], self.forces[-1:]], axis=0)
        return MpcSolution(f, "stale", self.kkt_residual, self.constraint_residual, 0, self.objective, 0.0, True)


def srb_state(euler, p, omega_world, v_world, gravity: float = GRAVITY) -> np.ndarray:
    """Pack a 13-state vector; ``euler`` is ``(yaw, pitch, roll)``."""
    yaw, pitch, roll = euler
    return np.concatenate([[roll, pitch, yaw], p, omega_world, v_world, [-gravity]])


def continuous_dynamics(model: SrbModel, yaw: float, r_feet):
    """Continuous-time ``(A, B)``; ``r_feet`` (4, 3) are lever arms from the CoM (world)."""
    Rz = rot_z(yaw)
    I_w = Rz @ model.inertia @ Rz.T
    I_inv = np.linalg.inv(I_w)
    A = np.zeros((N_STATE, N_STATE))
    A[0:3, 6:9] = Rz.T
    A[3:6, 9:12] = np.eye(3)
    A[11, 12] = 1.0
    B = np.zeros((N_STATE, 12))
    for i in range(4):
        B[6:9, 3 * i : 3 * i + 3] = I_inv @ skew(r_feet[i])
        B[9:12, 3 * i : 3 * i + 3] = np.eye(3) / model.mass
    return A, B


def discretize(A, B, dt):
    n, m = B.shape
    Mx = np.zeros((n + m, n + m))
    Mx[:n, :n] = A
    Mx[:n, n:] = B
    E = expm(Mx * dt)
    return E[:n, :n], E[:n, n:]


def nominal_forces(model: SrbModel, r_feet, contact) -> np.ndarray:
    """Least-norm vertical forces balancing weight and the roll/pitch moments."""
    f = np.zeros((4, 3))
    idx = np.flatnonzero(contact)
    if idx.size == 0:
        return f
    r = np.asarray(r_feet)[idx]
    # rows: sum fz = m g, sum (r x fz e_z)_x = r_y fz, _y = -r_x fz
    A = np.vstack([np.ones(idx.size), r[:, 1], -r[:, 0]])
    b = np.array([model.mass * model.gravity, 0.0, 0.0])
    fz = np.linalg.lstsq(A, b, rcond=None)[0]
    f[idx, 2] = fz
    return f


@dataclass
class QpProblem:
    """``min 1/2 u^T H u + g^T u  s.t.  C u >= d`` plus bookkeeping to rebuild forces."""

    H: np.ndarray
    g: np.ndarray
    C: np.ndarray
    d: np.ndarray
    slots: list = field(default_factory=list)  # (step, leg) per 3-block of u
    const: float = 0.0  # objective offset so the full cost is 1/2 u'Hu + g'u + const
    horizon: int = 0

    def objective(self, u) -> float:
        return float(0.5 * u @ self.H @ u + self.g @ u + self.const)

    def to_forces(self, u) -> np.ndarray:
        f = np.zeros((self.horizon, 4, 3))
        for j, (k, leg) in enumerate(self.slots):
            f[k, leg] = u[3 * j : 3 * j + 3]
        return f


def build_qp(x0, x_ref, contacts, r_feet, model: SrbModel, weights: MpcWeights) -> QpProblem:
    """Condensed QP for horizon ``N = len(contacts)``.

    Args:
        x0: current 13-state.
        x_ref: ``(N, 12)`` or ``(N, 13)`` reference states for steps 1..N.
        contacts: ``(N, 4)`` contact flags per step (flag ``k`` applies to the
            force acting from step ``k`` to ``k + 1``).
        r_feet: ``(4, 3)`` foot lever arms from the CoM in world coordinates.
    """
    contacts = np.asarray(contacts, dtype=bool)
    N = contacts.shape[0]
    yaw = float(x0[2])
    Ad, Bd = discretize(*continuous_dynamics(model, yaw, r_feet), weights.dt)
    slots = [(k, i) for k in range(N) for i in range(4) if contacts[k, i]]
    nu = 3 * len(slots)
    # prediction: X_k = A^k x0 + sum_j A^(k-1-j) B u_j
    Apow = [np.eye(N_STATE)]
    for _ in range(N):
        Apow.append(Ad @ Apow[-1])
    Sx = np.vstack([Apow[k + 1] for k in range(N)])
    Su = np.zeros((N * N_STATE, nu))
    for j, (kf, leg) in enumerate(slots):
        col = Bd[:, 3 * leg : 3 * leg + 3]
        for k in range(kf, N):
            Su[k * N_STATE : (k + 1) * N_STATE, 3 * j : 3 * j + 3] = Apow[k - kf] @ col
    xr = np.asarray(x_ref, dtype=float)
    if xr.shape[1] == 12:
        xr = np.hstack([xr, np.full((N, 1), -model.gravity)])
    Xref = xr.reshape(-1)
    Qbar = np.tile(np.asarray(weights.Q, dtype=float), N)
    f_nom = np.concatenate([nominal_forces(model, r_feet, contacts[k])[leg] for k, leg in slots]) if slots else np.zeros(0)
    dx0 = Sx @ x0 - Xref
    H = Su.T @ (Qbar[:, None] * Su) + weights.R * np.eye(nu)
    g = Su.T @ (Qbar * dx0) - weights.R * f_nom
    const = 0.5 * float(dx0 @ (Qbar * dx0)) + 0.5 * weights.R * float(f_nom @ f_nom)
    # constraints per force block: fz >= fmin, -fz >= -fmax, mu fz -+ fx >= 0, mu fz -+ fy >= 0
    mu = model.mu
    f_max = weights.f_max_factor * model.mass * model.gravity
    blk = np.array([
        [0, 0, 1],
        [0, 0, -1],
        [-1, 0, mu],
        [1, 0, mu],
        [0, -1, mu],
        [0, 1, mu],
    ], dtype=float)
    bd = np.array([weights.f_min, -f_max, 0, 0, 0, 0], dtype=float)
    C = np.zeros((6 * len(slots), nu))
    d = np.tile(bd, len(slots))
    for j in range(len(slots)):
        C[6 * j : 6 * j + 6, 3 * j : 3 * j + 3] = blk
    return QpProblem(0.5 * (H + H.T), g, C, d, slots, const, N)


def solve_qp(qp: QpProblem, max_iter: int = 500):
    """Solve with quadprog; returns ``(u, multipliers, iterations)``."""
    if qp.H.shape[0] == 0:
        return np.zeros(0), np.zeros(0), 0
    # quadprog: min 1/2 x'Gx - a'x  s.t.  C'x >= b
    u, _, _, iters, lam, _ = quadprog.solve_qp(qp.H, -qp.g, qp.C.T, qp.d, 0)
    if iters[0] > max_iter:
        raise RuntimeError(f"QP exceeded {max_iter} iterations")
    return u, lam, int(iters[0])


def kkt_residuals(qp: QpProblem, u, lam):
    """``(constraint_residual, kkt_residual)`` at a primal-dual pair."""
    if u.size == 0:
        return 0.0, 0.0
    slack = qp.C @ u - qp.d
    cons = float(max(0.0, -slack.min()))
    stat = qp.H @ u + qp.g - qp.C.T @ lam
    comp = np.abs(lam * slack)
    dual = max(0.0, -float(lam.min()))
    scale = max(1.0, float(np.abs(qp.g).max()))
    return cons, float(max(np.abs(stat).max() / scale, comp.max() / scale, dual))


def srb_mpc(x0, x_ref, contacts, r_feet, model: SrbModel, weights: MpcWeights = MpcWeights(),
            previous: MpcSolution | None = None, log_timing: bool = False) -> MpcSolution:
    """Plan ground-reaction forces over the horizon.

    When the solver fails and a previous plan exists, that plan is reused
    shifted by one step and flagged stale; without one the failure is raised.
    """
    contacts = np.asarray(contacts, dtype=bool)
    N = contacts.shape[0]
    if not contacts.any():
        return MpcSolution(np.zeros((N, 4, 3)), "idle")
    t0 = time.perf_counter() if log_timing else 0.0
    qp = build_qp(np.asarray(x0, dtype=float), x_ref, contacts, r_feet, model, weights)
    try:
        u, lam, iters = solve_qp(qp, weights.max_iter)
        if not np.all(np.isfinite(u)):
            raise RuntimeError("non-finite QP solution")
    except ValueError as exc:
        if previous is not None:
            return previous.shifted()
        raise MpcInfeasibleError(str(exc)) from exc
    except RuntimeError:
        if previous is not None:
            return previous.shifted()
        raise
    cons, kkt = kkt_residuals(qp, u, lam)
    dt_solve = time.perf_counter() - t0 if log_timing else 0.0
    return MpcSolution(qp.to_forces(u), "optimal", kkt, cons, iters, qp.objective(u), dt_solve)
