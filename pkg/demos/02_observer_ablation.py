"""Tracking a moving marker with and without the velocity observer.

Kinematic tier: the base and arm follow their velocity commands through a
first-order lag. Run with ``python demos/02_observer_ablation.py``; it takes
a few seconds.
"""

import numpy as np

from quadvs.harness import run_scenario, scenario_config

for mode in ("sto", "wosto"):
    res = run_scenario(scenario_config("line-0.3", observer_mode=mode, duration=10.0), write=False)
    m = res.metrics
    print(f"{mode:6s} status={m.status:14s} converged at={m.convergence_time and round(m.convergence_time, 2)}  failure={m.failure_reason}")

# The observer's velocity estimate against the truth, every second of the STO run.
res = run_scenario(scenario_config("line-0.3", duration=10.0), write=False)
obs = np.array(res.rows["observer"], dtype=float)
print("\n   t    estimate error (m/s)")
for row in obs[::400]:
    print(f"{row[0]:5.1f}   {row[-1]:.4f}")
