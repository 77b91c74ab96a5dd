"""
Step responses of the reset loops
=================================

Simulate each loop with its own reset coefficient, then repeat one of them
with the reset switched off (gamma = 1) and compare against the exact
linear response.
"""

import numpy as np

from reset_verdict import demo_set
from reset_verdict.sim import assemble_system, linear_reference, step, step_response

horizon = 0.3

for name, system in demo_set().items():
    cl = assemble_system(system)
    trace = step_response(cl, horizon)
    overshoot = 100 * (trace.y.max() - 1)
    print(f"{name}: {len(trace.reset_instants)} resets, first at {trace.reset_instants[0] * 1e3:.3f} ms, "
          f"overshoot {overshoot:.1f}%, final y = {trace.y[-1]:.5f}")

# write one trace to disk: t, y, e, u_r, x_r, reset flag
cl = assemble_system(demo_set()["C3"])
with open("step_C3.csv", "w") as fh:
    fh.write(step_response(cl, horizon).to_csv())

# gamma = 1 removes the jumps, so the flow must match expm exactly
linear = cl.with_gamma(1.0)
trace = step_response(linear, horizon)
exact = linear_reference(linear, step(), trace.times)
print("gamma = 1, max relative deviation:",
      np.max(np.abs(trace.states - exact)) / np.max(np.abs(exact)))
