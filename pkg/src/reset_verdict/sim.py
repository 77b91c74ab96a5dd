"""Event-driven simulation of the closed-loop reset system.

State ``x = [x_r, zeta]``: the reset state followed by the states of the
linear part. Between resets the state obeys

    dx/dt = Abar x + Bbar r(t) + Bdbar d(t)

and whenever ``e = r - Cbar x`` crosses zero the first state is multiplied by
``gamma``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .elements import ResetElement, matrices
from .errors import ImproperTransferFunction, StepSizeCollapse, ZenoDetected
from .lti import RationalTF, balance, realize


@dataclass(frozen=True, eq=False)
class ClosedLoopSystem:
    A: np.ndarray
    B: np.ndarray
    Bd: np.ndarray
    A_rho: np.ndarray
    C: np.ndarray
    gamma: float
    C_r: float = 1.0
    D_r: float = 0.0

    @property
    def order(self) -> int:
        return self.A.shape[0]

    def error(self, t, x, r) -> float:
        return r - self.C @ x

    def with_gamma(self, gamma: float) -> "ClosedLoopSystem":
        A_rho = np.eye(self.order)
        A_rho[0, 0] = gamma
        return ClosedLoopSystem(self.A, self.B, self.Bd, A_rho, self.C, gamma, self.C_r, self.D_r)


def assemble(elem: ResetElement, loop: RationalTF, B_d: Optional[Sequence[float]] = None,
             balanced: bool = True) -> ClosedLoopSystem:
    """Closed-loop matrices from the reset element and the linear part.

    ``loop`` is realized in controllable canonical form and, by default,
    diagonally balanced. The disturbance input matrix defaults to the
    control input matrix ``B`` of that realization.
    """
    if not loop.is_strictly_proper:
        raise ImproperTransferFunction("the linear part must be strictly proper")
    ss = realize(loop)
    if balanced:
        ss = balance(ss)
    A, B, C = ss.A, ss.B, ss.C
    rm = matrices(elem)
    n = A.shape[0]
    Abar = np.zeros((n + 1, n + 1))
    Abar[0, 0] = rm.A_r
    Abar[0, 1:] = -rm.B_r * C
    Abar[1:, 0] = B * rm.C_r
    Abar[1:, 1:] = A - rm.D_r * np.outer(B, C)
    Bbar = np.r_[rm.B_r, rm.D_r * B]
    Bd = B if B_d is None else np.asarray(B_d, dtype=float)
    if Bd.shape != (n,):
        raise ValueError(f"disturbance input must have {n} entries")
    Bdbar = np.r_[0.0, Bd]
    A_rho = np.eye(n + 1)
    A_rho[0, 0] = elem.gamma
    Cbar = np.r_[0.0, C]
    return ClosedLoopSystem(Abar, Bbar, Bdbar, A_rho, Cbar, elem.gamma, rm.C_r, rm.D_r)


def assemble_system(system, balanced: bool = True) -> ClosedLoopSystem:
    return assemble(system.reset_element, system.loop, system.disturbance_input, balanced)


@dataclass(frozen=True)
class Signal:
    """Input signal: ``zero``, ``step``, ``ramp``, ``sine`` or ``pwc``.

    ``pwc`` holds ``values[i]`` from ``times[i]`` on (zero before ``times[0]``).
    """

    kind: str = "zero"
    amplitude: float = 1.0
    t0: float = 0.0
    frequency: float = 1.0  # rad/s, sine only
    times: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("zero", "step", "ramp", "sine", "pwc"):
            raise ValueError(f"unknown signal kind {self.kind!r}")
        if self.kind == "pwc" and (len(self.times) != len(self.values) or not self.times):
            raise ValueError("pwc needs matching, non-empty times and values")

    def __call__(self, t: float) -> float:
        if self.kind == "zero":
            return 0.0
        if self.kind == "pwc":
            i = np.searchsorted(self.times, t, side="right") - 1
            return float(self.values[i]) if i >= 0 else 0.0
        if t < self.t0:
            return 0.0
        if self.kind == "step":
            return self.amplitude
        if self.kind == "ramp":
            return self.amplitude * (t - self.t0)
        return self.amplitude * math.sin(self.frequency * (t - self.t0))

    def breakpoints(self, horizon: float) -> list[float]:
        pts = list(self.times) if self.kind == "pwc" else ([] if self.kind == "zero" else [self.t0])
        return sorted(p for p in pts if 0 < p < horizon)

    def sup_norm(self, horizon: float) -> float:
        if self.kind == "zero":
            return 0.0
        if self.kind == "pwc":
            return max(abs(v) for v in self.values)
        if self.kind == "ramp":
            return abs(self.amplitude) * max(0.0, horizon - self.t0)
        return abs(self.amplitude)

    def is_piecewise_constant(self) -> bool:
        return self.kind in ("zero", "step", "pwc")


def step(amplitude: float = 1.0, t0: float = 0.0) -> Signal:
    return Signal("step", amplitude, t0)


@dataclass(frozen=True)
class SimOptions:
    rtol: float = 1e-12
    atol: float = 1e-15
    method: str = "DOP853"
    # None caps steps at half the output spacing; dense output inside long
    # steps is far less accurate than the step end points
    max_step: Optional[float] = None
    leave_band: Optional[float] = None  # default 1e-9 * (1 + sup|r|)
    dwell: float = 1e-7
    max_jumps: int = 1_000_000
    n_samples: int = 2001


@dataclass
class SimTrace:
    times: np.ndarray
    states: np.ndarray
    y: np.ndarray
    e: np.ndarray
    u_r: np.ndarray
    reset_flag: np.ndarray
    reset_instants: list[float] = field(default_factory=list)
    reset_errors: list[float] = field(default_factory=list)
    jumps: list[tuple[float, np.ndarray, np.ndarray]] = field(default_factory=list)
    segment: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    metadata: dict = field(default_factory=dict)

    @property
    def x_r(self) -> np.ndarray:
        return self.states[:, 0]

    def to_csv(self) -> str:
        lines = ["t,y,e,u_r,x_r,reset"]
        for t, y, e, u, xr, f in zip(self.times, self.y, self.e, self.u_r, self.x_r, self.reset_flag):
            lines.append(f"{t:.6g},{y:.6g},{e:.6g},{u:.6g},{xr:.6g},{int(f)}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "times": self.times.tolist(),
            "y": self.y.tolist(),
            "e": self.e.tolist(),
            "u_r": self.u_r.tolist(),
            "x_r": self.x_r.tolist(),
            "reset_instants": list(self.reset_instants),
            "reset_errors": list(self.reset_errors),
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _integrate(sys, r, d, t0, t1, x0, opts, events=None, max_step=math.inf):
    A, B, Bd = sys.A, sys.B, sys.Bd

    def f(t, x):
        return A @ x + B * r(t) + Bd * d(t)

    sol = solve_ivp(f, (t0, t1), x0, method=opts.method, rtol=opts.rtol, atol=opts.atol,
                    max_step=max_step, dense_output=True, events=events)
    if sol.status == -1:
        raise StepSizeCollapse(sol.message)
    return sol


def simulate(sys: ClosedLoopSystem, r: Signal = Signal(), d: Signal = Signal(),
             horizon: float = 1.0, opts: SimOptions = SimOptions(),
             x0: Optional[Sequence[float]] = None) -> SimTrace:
    """Flow/jump simulation with event localisation on ``e(t) = 0``."""
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    n = sys.order
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    band = opts.leave_band if opts.leave_band is not None else 1e-9 * (1 + r.sup_norm(horizon))
    C = sys.C
    breaks = sorted(set(r.breakpoints(horizon) + d.breakpoints(horizon))) + [horizon]
    h_max = opts.max_step if opts.max_step is not None else horizon / (2 * max(1, opts.n_samples - 1))

    def err(t, xx):
        return r(t) - C @ xx

    crossing = lambda t, xx: err(t, xx)
    crossing.terminal = True
    leave = lambda t, xx: abs(err(t, xx)) - band
    leave.terminal = True
    leave.direction = 1.0

    sols = []  # (solution, t_start, t_end, segment id)
    resets, reset_err, jumps = [], [], []
    t = 0.0
    # "armed": watching for e = 0; "dwell": just reset, waiting out the dwell
    # time or the leave band; "wait": inside the band after the dwell (or at
    # a segment start), re-armed only once the band is left
    mode = "armed"
    dwell_until = 0.0
    seg = 0
    sliding = 0
    boundary = True  # at t = 0 or an input breakpoint, where e may jump
    while t < horizon:
        t_break = next(b for b in breaks if b > t)
        if boundary:
            inside = abs(err(t, x)) <= band
            if mode == "armed" and inside:
                mode = "wait"
                sliding += 1
            elif mode != "armed" and not inside and t >= dwell_until:
                mode = "armed"
            boundary = False
        if mode == "armed":
            sol = _integrate(sys, r, d, t, t_break, x, opts, crossing, h_max)
            if sol.status == 1 and sol.t_events[0].size:
                te = float(sol.t_events[0][0])
                xe = sol.y_events[0][0]
                sols.append((sol, t, te, seg))
                resets.append(te)
                reset_err.append(float(err(te, xe)))
                x_new = sys.A_rho @ xe
                jumps.append((te, xe.copy(), x_new.copy()))
                if len(resets) > opts.max_jumps:
                    raise ZenoDetected(f"more than {opts.max_jumps} resets before t={te:g}")
                x, t = x_new, te
                mode, dwell_until = "dwell", te + opts.dwell
                seg += 1
                continue
            sols.append((sol, t, t_break, seg))
            x, t = sol.y[:, -1], t_break
            boundary = True
            continue
        t_end = min(dwell_until, t_break) if mode == "dwell" else t_break
        sol = _integrate(sys, r, d, t, t_end, x, opts, leave, h_max)
        stop = float(sol.t[-1])
        sols.append((sol, t, stop, seg))
        x, t = sol.y[:, -1], stop
        boundary = sol.status == 0 and stop == t_break
        if sol.status == 1 or abs(err(t, x)) > band:
            mode = "armed"
        elif mode == "dwell" and t >= dwell_until:
            # dwell elapsed but e is still inside the band
            mode = "wait"
            sliding += 1

    sample = np.linspace(0.0, horizon, opts.n_samples)
    times = np.unique(np.concatenate([sample, resets]))
    states = np.empty((times.size, n))
    seg_id = np.empty(times.size, dtype=int)
    for sol, a, b, sid in sols:
        sel = (times >= a) & (times <= b)
        if sel.any():
            states[sel] = sol.sol(times[sel]).T
            seg_id[sel] = sid
    # at a reset instant keep the pre-jump state of the segment that ended there
    for (te, xe, _), sid in zip(jumps, range(len(jumps))):
        i = np.searchsorted(times, te)
        states[i] = xe
        seg_id[i] = sid
    rv = np.array([r(t) for t in times])
    y = states @ C
    e = rv - y
    u_r = sys.C_r * states[:, 0] + sys.D_r * e
    flag = np.isin(times, resets)
    meta = {"options": {k: (str(v) if isinstance(v, float) and not math.isfinite(v) else v)
                        for k, v in asdict(opts).items()},
            "leave_band": band, "max_step": h_max, "n_resets": len(resets),
            "n_steps": int(sum(sol.t.size - 1 for sol, *_ in sols)), "sliding_events": sliding,
            "gamma": sys.gamma, "horizon": horizon}
    return SimTrace(times, states, y, e, u_r, flag, resets, reset_err, jumps, seg_id, meta)


def step_response(sys: ClosedLoopSystem, horizon: float, opts: SimOptions = SimOptions()) -> SimTrace:
    return simulate(sys, step(1.0), Signal(), horizon, opts)


def boundedness_check(trace: SimTrace, bound: float) -> bool:
    return bool(np.max(np.linalg.norm(trace.states, axis=1)) <= bound)


def steady_state(sys: ClosedLoopSystem, r_value: float = 1.0, d_value: float = 0.0) -> np.ndarray:
    """Equilibrium of the linear flow for constant inputs."""
    return np.linalg.solve(sys.A, -(sys.B * r_value + sys.Bd * d_value))


# ------------------------------------------------------------ references


def propagate_exact(sys: ClosedLoopSystem, x0, dt: float, r_value: float = 0.0,
                    d_value: float = 0.0) -> np.ndarray:
    """Flow over ``dt`` with constant inputs via the augmented matrix exponential."""
    n = sys.order
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = sys.A
    M[:n, n] = sys.B * r_value + sys.Bd * d_value
    z = expm(M * dt) @ np.r_[np.asarray(x0, float), 1.0]
    return z[:n]


def linear_reference(sys: ClosedLoopSystem, r: Signal, times: np.ndarray,
                     d: Signal = Signal(), x0=None) -> np.ndarray:
    """States of the jump-free flow at ``times`` (piecewise-constant inputs only)."""
    if not (r.is_piecewise_constant() and d.is_piecewise_constant()):
        raise ValueError("exact reference needs piecewise-constant inputs")
    n = sys.order
    x = np.zeros(n) if x0 is None else np.asarray(x0, float)
    cuts = sorted(set(r.breakpoints(times[-1] + 1) + d.breakpoints(times[-1] + 1)))
    out = np.empty((len(times), n))
    t = 0.0
    for i, ti in enumerate(times):
        for c in [c for c in cuts if t < c <= ti]:
            x = propagate_exact(sys, x, c - t, r(t), d(t))
            t = c
        x = propagate_exact(sys, x, ti - t, r(t), d(t))
        t = ti
        out[i] = x
    return out


def _rk4(sys, x, t, h, r, d):
    f = lambda tt, xx: sys.A @ xx + sys.B * r(tt) + sys.Bd * d(tt)
    k1 = f(t, x)
    k2 = f(t + h / 2, x + h / 2 * k1)
    k3 = f(t + h / 2, x + h / 2 * k2)
    k4 = f(t + h, x + h * k3)
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def fixed_step_first_reset(sys: ClosedLoopSystem, r: Signal, h: float, horizon: float,
                           d: Signal = Signal(), x0=None, t_tol: float = 1e-12) -> Optional[float]:
    """First zero crossing of ``e`` using classical RK4 at fixed step ``h``.

    The crossing inside the bracketing step is located by bisection on the
    length of a single RK4 step taken from the start of that step.
    """
    x = np.zeros(sys.order) if x0 is None else np.asarray(x0, float)
    t = 0.0
    e_prev = r(0.0) - sys.C @ x
    while t < horizon:
        x_new = _rk4(sys, x, t, h, r, d)
        e_new = r(t + h) - sys.C @ x_new
        if e_prev != 0 and np.sign(e_new) != np.sign(e_prev):
            lo, hi = 0.0, h
            while hi - lo > t_tol:
                mid = 0.5 * (lo + hi)
                em = r(t + mid) - sys.C @ _rk4(sys, x, t, mid, r, d)
                if np.sign(em) == np.sign(e_prev):
                    lo = mid
                else:
                    hi = mid
            return t + 0.5 * (lo + hi)
        x, t, e_prev = x_new, t + h, e_new
    return None


def reference_trace(sys: ClosedLoopSystem, r: Signal, horizon: float,
                    n_samples: int = 2001, d: Signal = Signal()) -> SimTrace:
    """Jump-free trace from :func:`linear_reference`, on the same sample grid
    :func:`simulate` uses by default."""
    times = np.linspace(0.0, horizon, n_samples)
    states = linear_reference(sys, r, times, d)
    rv = np.array([r(t) for t in times])
    y = states @ sys.C
    e = rv - y
    u_r = sys.C_r * states[:, 0] + sys.D_r * e
    return SimTrace(times, states, y, e, u_r, np.zeros(times.size, bool),
                    segment=np.zeros(times.size, int),
                    metadata={"reference": "matrix exponential", "n_resets": 0,
                              "gamma": sys.gamma, "horizon": horizon})
