"""Run metrics and the STO / woSTO comparison report."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

STATUS_EXIT = {"converged": 0, "tracking_lost": 3, "not_converged": 4, "numerical_fault": 5}


@dataclass
class RunMetrics:
    scenario: str
    observer_mode: str
    tier: str
    status: str
    duration: float  # configured duration
    end_time: float  # last logged control time
    failure_time: float | None
    failure_reason: str | None
    convergence_time: float | None
    tracking_rms: float
    tracking_max: float
    steady_max_error: float | None  # None when the run ended before the steady window
    final_error: float
    visual_error_max: float
    visual_error_final: float
    observer_convergence_time: float | None
    observer_steady_error: float | None
    mpc_solves: int = 0
    mpc_stale: int = 0
    mpc_max_kkt: float = 0.0
    mpc_max_constraint: float = 0.0
    mpc_max_iterations: int = 0
    arm_frozen_steps: int = 0
    arm_saturated_steps: int = 0

    @property
    def success(self) -> bool:
        return self.status == "converged"

    @property
    def exit_code(self) -> int:
        return STATUS_EXIT[self.status]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["success"] = self.success
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()}


def convergence_time(t, err, threshold: float, hold: float):
    """First time after which ``err < threshold`` holds for ``hold`` seconds, else ``None``."""
    t = np.asarray(t, dtype=float)
    ok = np.asarray(err, dtype=float) < threshold
    start = None
    for ti, good in zip(t, ok):
        if good:
            if start is None:
                start = ti
            if ti - start >= hold - 1e-9:
                return float(start)
        else:
            start = None
    return None


def settle_time(t, err, threshold: float):
    """First time after which ``err < threshold`` for the rest of the record, else ``None``."""
    t = np.asarray(t, dtype=float)
    bad = np.flatnonzero(np.asarray(err, dtype=float) >= threshold)
    if bad.size == 0:
        return float(t[0]) if t.size else None
    if bad[-1] == t.size - 1:
        return None
    return float(t[bad[-1] + 1])


def compute_metrics(cfg, t, tracking_err, visual_err, obs_err, status, failure_time=None, failure_reason=None,
                    mpc_log=(), frozen=0, saturated=0) -> RunMetrics:
    t = np.asarray(t, dtype=float)
    err = np.asarray(tracking_err, dtype=float)
    verr = np.asarray(visual_err, dtype=float)
    oerr = np.asarray(obs_err, dtype=float)
    mc = cfg.metrics
    t_conv = convergence_time(t, err, mc.convergence_threshold, mc.convergence_hold)
    if status is None:
        status = "converged" if t_conv is not None else "not_converged"
    t_steady = cfg.duration * (1.0 - mc.steady_fraction)
    complete = status in ("converged", "not_converged")
    steady = t >= t_steady
    steady_max = float(err[steady].max()) if complete and steady.any() else None
    obs_steady = float(oerr[steady].max()) if complete and steady.any() else None
    kkt = [s.kkt_residual for s in mpc_log if not s.stale]
    cons = [s.constraint_residual for s in mpc_log if not s.stale]
    return RunMetrics(
        scenario=cfg.scenario,
        observer_mode=cfg.observer_mode,
        tier=cfg.tier,
        status=status,
        duration=cfg.duration,
        end_time=float(t[-1]) if t.size else 0.0,
        failure_time=failure_time,
        failure_reason=failure_reason,
        convergence_time=t_conv,
        tracking_rms=float(np.sqrt(np.mean(err**2))) if err.size else float("nan"),
        tracking_max=float(err.max()) if err.size else float("nan"),
        steady_max_error=steady_max,
        final_error=float(err[-1]) if err.size else float("nan"),
        visual_error_max=float(verr.max()) if verr.size else float("nan"),
        visual_error_final=float(verr[-1]) if verr.size else float("nan"),
        observer_convergence_time=settle_time(t, oerr, mc.observer_threshold) if complete else None,
        observer_steady_error=obs_steady,
        mpc_solves=len(mpc_log),
        mpc_stale=sum(1 for s in mpc_log if s.stale),
        mpc_max_kkt=max(kkt, default=0.0),
        mpc_max_constraint=max(cons, default=0.0),
        mpc_max_iterations=max((s.iterations for s in mpc_log), default=0),
        arm_frozen_steps=int(frozen),
        arm_saturated_steps=int(saturated),
    )


class ScenarioMismatchError(ValueError):
    """Compared runs belong to different scenarios."""


COMPARE_COLUMNS = (
    "scenario", "mode_a", "mode_b", "status_a", "status_b", "converged_a", "converged_b",
    "rms_a", "rms_b", "max_a", "max_b", "steady_max_a", "steady_max_b",
    "rms_diff", "max_diff", "steady_ratio",
)


def _num(x):
    return float("inf") if x is None else float(x)


def compare_runs(metrics_a, metrics_b) -> dict:
    """One report row comparing two runs of the same scenario.

    ``steady_ratio`` is ``steady_max_b / steady_max_a``; a run that never
    reached its steady window counts as infinite error.
    """
    a = metrics_a if isinstance(metrics_a, dict) else metrics_a.to_dict()
    b = metrics_b if isinstance(metrics_b, dict) else metrics_b.to_dict()
    if a["scenario"] != b["scenario"]:
        raise ScenarioMismatchError(f"cannot compare {a['scenario']!r} with {b['scenario']!r}")
    sa, sb = _num(a["steady_max_error"]), _num(b["steady_max_error"])
    if sa == sb:
        ratio = 1.0
    elif sa == 0:
        ratio = float("inf")
    else:
        ratio = sb / sa
    return {
        "scenario": a["scenario"],
        "mode_a": a["observer_mode"],
        "mode_b": b["observer_mode"],
        "status_a": a["status"],
        "status_b": b["status"],
        "converged_a": a["status"] == "converged",
        "converged_b": b["status"] == "converged",
        "rms_a": a["tracking_rms"],
        "rms_b": b["tracking_rms"],
        "max_a": a["tracking_max"],
        "max_b": b["tracking_max"],
        "steady_max_a": sa,
        "steady_max_b": sb,
        "rms_diff": b["tracking_rms"] - a["tracking_rms"],
        "max_diff": b["tracking_max"] - a["tracking_max"],
        "steady_ratio": ratio,
    }
