"""Super-twisting observer for the target's linear velocity in the camera frame.

The observer runs a copy of the target-centroid dynamics with the unknown
target velocity replaced by the integral state ``y``::

    h_hat' = -[Omega]x h_o - L_t v_c + k1 phi1(e_o) e_o + L_t y
    y'     = k2 phi2(e_o) e_o
    phi1   = k3 |e_o|^-p + k4
    phi2   = (k3 (1 - p) |e_o|^-p + k4) phi1

with ``e_o = h_o - h_hat``. The target depth never enters; the known gain of
the manipulator feature, ``L_t``, stands in for the unknown ``L_o``.

The rotational transport term uses the measured ``h_o``. Using the estimate
``h_hat`` there is a possible variant; it is not what this module computes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rotations import skew


@dataclass(frozen=True)
class ObserverGains:
    k1: float = 10.0
    k2: float = 100.0
    k3: float = 0.05
    k4: float = 0.05
    p: float = 0.4
    y_max: float = 2.0  # anti-windup bound on |y|, m/s

    def __post_init__(self):
        if min(self.k1, self.k2, self.k3, self.k4) <= 0:
            raise ValueError("observer gains must be positive")
        if not 0 < self.p <= 0.5:
            raise ValueError("exponent p must lie in (0, 0.5]")
        if self.y_max <= 0:
            raise ValueError("y_max must be positive")


@dataclass
class ObserverState:
    h_hat: np.ndarray
    y: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rejected: bool = False  # last measurement was non-finite

    def copy(self) -> "ObserverState":
        return ObserverState(self.h_hat.copy(), self.y.copy(), self.rejected)


def sto_init(h_o_first) -> ObserverState:
    return ObserverState(np.array(h_o_first, dtype=float), np.zeros(3))


def correction_terms(e_o, gains: ObserverGains):
    """``(phi1 e_o, phi2 e_o)``; both are defined as zero at ``e_o = 0``."""
    e_o = np.asarray(e_o, dtype=float)
    n = np.linalg.norm(e_o)
    if n == 0.0:
        return np.zeros(3), np.zeros(3)
    a = n ** (-gains.p)
    phi1 = gains.k3 * a + gains.k4
    phi2 = (gains.k3 * (1.0 - gains.p) * a + gains.k4) * phi1
    return phi1 * e_o, phi2 * e_o


def sto_step(state: ObserverState, h_o, Omega_c, v_c, L_t, gains: ObserverGains, dt: float) -> ObserverState:
    """One explicit-Euler step. Non-finite inputs leave the state unchanged and flag it."""
    if not 0 < dt <= 0.01:
        raise ValueError("dt must lie in (0, 0.01]")
    h_o = np.asarray(h_o, dtype=float)
    inputs = (h_o, np.asarray(Omega_c, float), np.asarray(v_c, float), np.asarray(L_t, float))
    if not all(np.all(np.isfinite(x)) for x in inputs):
        out = state.copy()
        out.rejected = True
        return out
    e_o = h_o - state.h_hat
    c1, c2 = correction_terms(e_o, gains)
    L_t = inputs[3]
    h_dot = -skew(Omega_c) @ h_o - L_t @ v_c + gains.k1 * c1 + L_t @ state.y
    y = state.y + dt * gains.k2 * c2
    ny = np.linalg.norm(y)
    if ny > gains.y_max:
        y = y * (gains.y_max / ny)
    return ObserverState(state.h_hat + dt * h_dot, y, False)


def sto_estimate(state: ObserverState) -> np.ndarray:
    """Current estimate of the target velocity in the camera frame."""
    return state.y.copy()
