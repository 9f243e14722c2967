"""Full-stack run: trotting base, force planning and torque-driven arm.

This replays ``configs/line-0.1-dynamic.yaml`` for a shorter horizon. Run
with ``python demos/03_trotting.py``; it takes about 15 s.
"""

from pathlib import Path

import numpy as np

from quadvs.harness import load_config, run_scenario

cfg = load_config(Path(__file__).resolve().parents[1] / "configs" / "line-0.1-dynamic.yaml")
res = run_scenario(cfg.replace(duration=8.0), write=False)
m = res.metrics
print(f"status={m.status} converged at={m.convergence_time} s, steady max error={m.steady_max_error:.4f} m")
print(f"force plans: {m.mpc_solves}, worst KKT residual {m.mpc_max_kkt:.1e}")

err = np.array(res.rows["errors"], dtype=float)
print("\n   t    tracking error (m)")
for row in err[::400]:
    print(f"{row[0]:5.1f}   {row[1]:.4f}")
