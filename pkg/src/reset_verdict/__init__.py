"""Frequency-domain stability analysis of reset control systems."""

from .elements import ResetElement, ResetKind, base_tf, gfore, matrices, pci
from .errors import *  # noqa: F401,F403
from .hbeta import FeasibleRegion, HBetaPoint, HBetaProblem, cross_check, feasible, re_H, scan
from .lti import RationalTF, StateSpace, realize, tf_eval, tf_poles, tf_series, tf_zeros
from .nsv import (ClassificationReport, FrequencyGrid, NSVCurve, Verdict, nsv_at, sweep,
                  theorem1_verdict, wrap_angle)
from .sim import (ClosedLoopSystem, Signal, SimOptions, SimTrace, assemble, assemble_system,
                  boundedness_check, simulate, step_response)
from .system import SystemDescription, demo_set, demo_system

__version__ = "0.1.0"
