"""
Checking the verdicts with a brute-force H-beta scan
====================================================

Independently of the angle test, look for (beta, rho') that make
Re H(jw) > 0 on a dense frequency grid. A nonempty region means the
quadratic stability certificate exists.
"""

import math

from reset_verdict import demo_set, theorem1_verdict
from reset_verdict.hbeta import HBetaProblem, cross_check, scan

for name, system in demo_set().items():
    region = scan(system)
    lo, hi = region.ratio_interval
    check = cross_check(theorem1_verdict(system), region)
    print(f"{name}: {lo:.3f} < rho'/beta < {hi:.3f}   ({region.mask.sum()} grid points, {check.status})")

# feasibility only depends on the direction of (beta, rho')
problem = HBetaProblem(demo_set()["C1"])
for scale in (1e-3, 1.0, 1e3):
    print(scale, problem.feasible((scale, 1.5 * scale)))

lo, hi = region.direction_interval
print(f"feasible directions for {name}: {math.degrees(lo):.2f} .. {math.degrees(hi):.2f} deg")
