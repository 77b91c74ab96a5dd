"""
Pushing a loop past the certificate
===================================

A lightly damped third-order plant behind a GFORE. Raising the gain keeps
the base linear loop stable but swings the stability vector through more
than half a turn; from then on no H-beta pair exists either.
"""

import math

import numpy as np
from numpy.polynomial import polynomial as P

from reset_verdict import RationalTF, SystemDescription, gfore, theorem1_verdict
from reset_verdict.hbeta import scan
from reset_verdict.lti import base_linear_closed_loop_stable

den = np.real(P.polyfromroots([-0.25, -0.1 + 27j, -0.1 - 27j]))

for k in (10, 100, 300, 1000, 3000):
    plant = RationalTF((float(k),), tuple(den))
    system = SystemDescription(plant, RationalTF.gain(1.0), gfore(0.8), label=f"k={k}")
    report = theorem1_verdict(system)
    region = scan(system, resolution=60)
    print(f"k = {k:5d}  linear loop stable: {base_linear_closed_loop_stable(system.open_loop)!s:5}  "
          f"angles {math.degrees(report.theta1):7.2f} .. {math.degrees(report.theta2):7.2f} deg  "
          f"{report.verdict.value:26s} H-beta region nonempty: {region.nonempty}")
