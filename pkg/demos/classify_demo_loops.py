"""
Classifying the five positioning-stage loops
============================================

Each loop is a GFORE-based CgLp + PID controller on a mass-spring-damper
stage. We sweep the stability vector, look at its zero sets and angle span,
and print the verdict.
"""

import math

import numpy as np

from reset_verdict import demo_set, theorem1_verdict

# the stage and the five controllers ship with the package
systems = demo_set()

for name, system in systems.items():
    report, curve = theorem1_verdict(system, return_curve=True)
    M = f"{min(report.M):.1f}-{max(report.M):.1f}"
    Q = f"{min(report.Q):.1f}-{max(report.Q):.1f}"
    span = math.degrees(report.theta2 - report.theta1)
    print(f"{name}  gamma={system.reset_element.gamma:.1f}  M={M}  Q={Q}  "
          f"delta1={report.delta1:.3f} psi1={report.psi1:.3f}  span={span:.1f} deg  "
          f"-> {report.verdict.value}")

# the angle of the vector over frequency, for the first loop
report, curve = theorem1_verdict(systems["C1"], return_curve=True)
theta = np.degrees(curve.theta)
for w in (1e0, 1e2, 1e3, 1e4, 1e6):
    i = np.searchsorted(curve.omega, w)
    print(f"w = {curve.omega[i]:10.3g} rad/s   angle = {theta[i]:7.2f} deg")

# both ends approach the analytic limit directions
print("w -> 0:  ", report.limit_low.to_dict())
print("w -> inf:", report.limit_high.to_dict())
