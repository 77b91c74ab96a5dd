"""Random stable GFORE/PCI loops for the cross-check tests."""

import numpy as np
from numpy.polynomial import polynomial as P

from reset_verdict.elements import ResetElement
from reset_verdict.lti import RationalTF, base_linear_closed_loop_stable, has_pole_zero_cancellation
from reset_verdict.system import SystemDescription

UNITY = RationalTF((1.0,), (1.0,))


def _random_den(rng, order):
    poles = []
    while len(poles) < order:
        if order - len(poles) >= 2 and rng.random() < 0.5:
            re = -10 ** rng.uniform(-1, 2)
            im = 10 ** rng.uniform(-1, 2)
            poles += [complex(re, im), complex(re, -im)]
        else:
            poles.append(-10 ** rng.uniform(-1, 2))
    return np.real(P.polyfromroots(poles))


def random_system(rng, label="rand"):
    """Stable plant of order <= 4 (sometimes with an integrator) behind a
    random GFORE or PCI, at a gain below the largest stable one."""
    while True:
        order = int(rng.integers(1, 5))
        den = _random_den(rng, order)
        nz = int(rng.integers(0, order))
        num = np.real(P.polyfromroots(-10 ** rng.uniform(-1, 2, nz))) if nz else np.array([1.0])
        if rng.random() < 0.3:
            den = P.polymul(den, [0, 1])
        num = num / num[0] * abs(den[den != 0][0])
        kind = "gfore" if rng.random() < 0.6 else "pci"
        elem = ResetElement(kind, 10 ** rng.uniform(-1, 2), float(rng.uniform(-0.9, 0.9)))

        def make(k):
            return SystemDescription(RationalTF(tuple(k * num), tuple(den)), UNITY, elem, label=label)

        ks = np.logspace(-2, 3, 60)
        stable = [base_linear_closed_loop_stable(make(k).open_loop) for k in ks]
        if not stable[0]:
            continue
        kmax = ks[-1] if all(stable) else ks[stable.index(False) - 1]
        sysd = make(kmax * 10 ** rng.uniform(-1.5, 0))
        if not base_linear_closed_loop_stable(sysd.open_loop):
            continue
        if has_pole_zero_cancellation(sysd.open_loop):
            continue
        return sysd


def resonant_system(k, omega_r=0.8):
    """Lightly damped plant whose NSV span grows past pi as the gain rises."""
    den = tuple(np.real(P.polyfromroots([-0.25, -0.1 + 27j, -0.1 - 27j])))
    elem = ResetElement("gfore", omega_r, 0.0)
    return SystemDescription(RationalTF((float(k),), den), UNITY, elem, label=f"resonant k={k:g}")
