"""
Closed-loop ramp optimisation
=============================

The ramp shape (s, tau, delta_min, delta_max) is tuned by a bounded
Nelder-Mead search that only sees sampled costs, as it would on hardware.
Ramps that would push the light shift past the blockade are never run.
"""

import numpy as np

from rydberg_mwis import decode, optimize, verify
from rydberg_mwis.experiment import build_experiment, load_fixture

exp = build_experiment(load_fixture("2d_21211"))
prob = exp.opt_problem()
print("initial ramp:", prob.initial)
print("bounds:", prob.bounds)

# A short budget keeps the demo quick; the acceptance run uses 80.
result = optimize(prob, budget=30)
envelope = result.best_so_far()
for h, best in zip(result.history, envelope):
    print(f"{h.index:3d}  cost {h.cost:8.3f} +/- {h.stderr:.3f}  best {best:8.3f}")

# %%
# Verify the best ramp with a fresh 1000-shot run.
rec = verify(prob, result.best_params)
top = rec.argmax()
print(f"\nbest ramp: {result.best_params}")
print(f"verification argmax {top} -> {decode(exp.embedding, top)}  <H_MWIS> = {rec.estimated_cost:.3f}")
print(f"best-so-far improved by {envelope[0] - envelope[-1]:.3f} over {len(envelope)} evaluations")
assert np.all(np.diff(envelope) <= 0)
