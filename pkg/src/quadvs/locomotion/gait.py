"""Periodic gait schedule, Raibert footstep targets and swing-foot trajectories."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GaitSchedule:
    """Open-loop contact schedule.

    A leg is in stance while ``frac(t / period + offset) < duty``. The
    default is a trot: FL and RR in phase, FR and RL half a cycle later.
    """

    period: float = 0.4
    duty: float = 0.5
    offsets: tuple = (0.0, 0.5, 0.5, 0.0)

    def __post_init__(self):
        if self.period <= 0 or not 0 < self.duty <= 1:
            raise ValueError("period must be positive and duty in (0, 1]")
        if len(self.offsets) != 4:
            raise ValueError("need one phase offset per leg")

    @property
    def stance_time(self) -> float:
        return self.duty * self.period

    @property
    def swing_time(self) -> float:
        return (1.0 - self.duty) * self.period

    def phase(self, t: float) -> np.ndarray:
        ph = t / self.period + np.asarray(self.offsets, dtype=float)
        return ph - np.floor(ph)

    def contacts(self, t: float) -> np.ndarray:
        return self.phase(t) < self.duty

    def horizon(self, t: float, n: int, dt: float) -> np.ndarray:
        """Contact flags ``(n, 4)`` at ``t, t + dt, ...``."""
        return np.array([self.contacts(t + k * dt) for k in range(n)])

    def swing_progress(self, t: float) -> np.ndarray:
        """Fraction of the swing elapsed per leg (0 for stance legs)."""
        ph = self.phase(t)
        if self.duty >= 1.0:
            return np.zeros(4)
        return np.where(ph < self.duty, 0.0, (ph - self.duty) / (1.0 - self.duty))


def gait_contacts(t: float, schedule: GaitSchedule) -> np.ndarray:
    if t < 0:
        raise ValueError("time must be non-negative")
    return schedule.contacts(t)


def raibert_footstep(hip_pos, v_B, v_B_d, stance_time: float, k_step: float = 0.03) -> np.ndarray:
    """Foothold relative to the body: neutral point under the hip plus velocity terms.

    All vectors share one frame; the z component of the result is the hip's.
    """
    if stance_time <= 0:
        raise ValueError("stance_time must be positive")
    hip = np.asarray(hip_pos, dtype=float)
    v = np.asarray(v_B, dtype=float)
    vd = np.asarray(v_B_d, dtype=float)
    p = hip + 0.5 * stance_time * v + k_step * (v - vd)
    p[2] = hip[2]
    return p


def swing_trajectory(p0, pf, s: float, duration: float, height: float = 0.08):
    """Position, velocity and acceleration of the swing foot at progress ``s`` in [0, 1].

    Horizontal motion follows a cubic blend; height follows ``64 s^3 (1 - s)^3``
    which peaks at mid-swing and has zero velocity at both ends.
    """
    p0 = np.asarray(p0, dtype=float)
    pf = np.asarray(pf, dtype=float)
    s = float(np.clip(s, 0.0, 1.0))
    d = pf - p0
    b = 3 * s**2 - 2 * s**3
    db = (6 * s - 6 * s**2) / duration
    ddb = (6 - 12 * s) / duration**2
    pos = p0 + b * d
    vel = db * d
    acc = ddb * d
    u = s * (1 - s)
    z = 64 * height * u**3
    dz = 64 * height * 3 * u**2 * (1 - 2 * s) / duration
    ddz = 64 * height * (6 * u * (1 - 2 * s) ** 2 - 6 * u**2) / duration**2
    pos[2] += z
    vel[2] += dz
    acc[2] += ddz
    return pos, vel, acc
