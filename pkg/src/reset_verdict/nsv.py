"""Nyquist stability vector: sweep, classification and the UBIBS verdict.

The stability vector at frequency ``w`` is built from ``L = loop * C_R`` and
the reset element's base transfer function ``C_R``::

    chi     = |L + 1/2|**2 - 1/4          (sign tells circle membership)
    upsilon = a_R*a + b_R*b + a_R          (L = a + jb, C_R = a_R + j b_R)

``chi*beta + upsilon*rho'`` is, up to the positive factor ``|1 + L|**2``, the
real part of the H-beta transfer function, which is what makes the angle
span of the vector decide stability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .elements import ResetKind, base_tf
from .errors import (
    InternalInconsistency,
    PoleAtFrequency,
    PoleOnGrid,
    ZeroVector,
    ZeroVectorEncountered,
)
from .lti import (
    RationalTF,
    base_linear_closed_loop_stable,
    has_pole_zero_cancellation,
    origin_pole_order,
    tf_eval,
)

HALF_PI = 0.5 * math.pi
# strictness margin for "> 0" tests on the vector components
COMPONENT_MARGIN = 1e-9
# strictness margin for the angle bounds, radians
ANGLE_MARGIN = 1e-9

GRID_SAMPLE, CHI_ZERO, UPSILON_ZERO = 0, 1, 2


class Verdict(str, Enum):
    UBIBS_STABLE = "UBIBS_STABLE"
    NOT_QUADRATICALLY_STABLE = "NOT_QUADRATICALLY_STABLE"
    HYPOTHESIS_FAILED = "HYPOTHESIS_FAILED"


# ---------------------------------------------------------------- pointwise


def nsv_at(Lval, CRval):
    """Components ``(chi, upsilon)`` of the stability vector.

    Works elementwise on arrays. ``chi`` is evaluated as ``|L|**2 + Re(L)``,
    which equals ``|L + 1/2|**2 - 1/4`` without the cancellation for small L.
    """
    L = np.asarray(Lval, dtype=complex)
    C = np.asarray(CRval, dtype=complex)
    a, b = L.real, L.imag
    aR, bR = C.real, C.imag
    chi = a * a + b * b + a
    ups = aR * a + bR * b + aR
    if chi.ndim == 0:
        return float(chi), float(ups)
    return chi, ups


def wrap_angle(chi: float, upsilon: float, tol: float = 0.0) -> float:
    """Angle of ``(chi, upsilon)`` in ``[-pi/2, 3pi/2)``."""
    if math.hypot(chi, upsilon) <= tol or (chi == 0.0 and upsilon == 0.0):
        raise ZeroVector("stability vector vanishes; its angle is undefined")
    theta = math.atan2(upsilon, chi)
    if theta < -HALF_PI:
        theta += 2 * math.pi
    return theta


def wrap_angles(chi, upsilon, tol: float = 0.0) -> np.ndarray:
    """Vectorised :func:`wrap_angle`; zero vectors map to NaN."""
    chi = np.asarray(chi, dtype=float)
    upsilon = np.asarray(upsilon, dtype=float)
    theta = np.arctan2(upsilon, chi)
    theta = np.where(theta < -HALF_PI, theta + 2 * np.pi, theta)
    zero = np.hypot(chi, upsilon) <= tol
    zero |= (chi == 0.0) & (upsilon == 0.0)
    return np.where(zero, np.nan, theta)


# ------------------------------------------------------- asymptotic limits


class _Poly:
    """Polynomial in w with complex coefficients plus a magnitude bound.

    ``bound[k]`` accumulates the absolute values of all products that
    contributed to coefficient ``k``; it is used to tell structural zeros from
    round-off.
    """

    def __init__(self, coef, bound=None):
        self.coef = np.asarray(coef, dtype=complex)
        self.bound = np.abs(self.coef) if bound is None else np.asarray(bound, dtype=float)

    @classmethod
    def at_jw(cls, coeffs):
        c = np.asarray(coeffs, dtype=float)
        units = np.array([1, 1j, -1, -1j])[np.arange(c.size) % 4]
        return cls(c * units)

    def conj(self):
        return _Poly(np.conj(self.coef), self.bound)

    def __mul__(self, other):
        return _Poly(np.convolve(self.coef, other.coef), np.convolve(self.bound, other.bound))

    def __add__(self, other):
        n = max(self.coef.size, other.coef.size)
        c = np.zeros(n, complex)
        b = np.zeros(n)
        c[: self.coef.size] += self.coef
        c[: other.coef.size] += other.coef
        b[: self.bound.size] += self.bound
        b[: other.bound.size] += other.bound
        return _Poly(c, b)

    def real(self):
        return _Poly(self.coef.real.astype(complex), self.bound)

    def significant(self, rel: float = 1e-12) -> np.ndarray:
        """Real coefficients with round-off-level entries set to exactly zero."""
        c = self.coef.real.copy()
        c[np.abs(c) <= rel * self.bound] = 0.0
        return c


def nsv_polynomials(L: RationalTF, C_R: RationalTF) -> tuple[np.ndarray, np.ndarray]:
    """Real polynomials ``X(w), Y(w)`` with ``angle(X, Y) == angle(N(w))``.

    ``X = chi * |den_L|^2 |den_C|^2`` and ``Y = upsilon * |den_L|^2 |den_C|^2``,
    so for every ``w > 0`` away from poles they have the same direction as the
    stability vector. Coefficients are ascending in ``w``.
    """
    nl, dl = _Poly.at_jw(L.num), _Poly.at_jw(L.den)
    nc, dc = _Poly.at_jw(C_R.num), _Poly.at_jw(C_R.den)
    dl2 = dl * dl.conj()
    dc2 = dc * dc.conj()
    x = ((nl * nl.conj()) + (nl * dl.conj())).real() * dc2
    y = (nl.conj() * nc * dl * dc.conj()).real() + dl2 * (nc * dc.conj()).real()
    return x.significant(), y.significant()


@dataclass(frozen=True)
class LimitRecord:
    """Direction of the stability vector as ``w -> 0`` or ``w -> inf``.

    ``dominated`` is ``"chi"`` or ``"upsilon"`` when one component outgrows
    the other, ``"both"`` when they scale alike (finite direction).
    ``exponents`` are the leading powers of ``w`` in ``(X, Y)``.
    """

    kind: str
    direction: tuple[float, float]
    angle: float
    dominated: str
    origin_pole_order: int
    exponents: tuple[Optional[int], Optional[int]]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "direction": list(self.direction),
            "angle_deg": math.degrees(self.angle),
            "dominated": self.dominated,
            "origin_pole_order": self.origin_pole_order,
            "exponents": list(self.exponents),
        }


def _leading(coef: np.ndarray, high: bool) -> tuple[Optional[int], float]:
    nz = np.flatnonzero(coef)
    if nz.size == 0:
        return None, 0.0
    k = int(nz[-1] if high else nz[0])
    return k, float(coef[k])


def limit_record(L: RationalTF, C_R: RationalTF, kind: str, loop_origin_order: int = 0) -> LimitRecord:
    """Exact limit direction from the leading terms of :func:`nsv_polynomials`."""
    if kind not in ("omega_to_zero", "omega_to_infinity"):
        raise ValueError(kind)
    X, Y = nsv_polynomials(L, C_R)
    high = kind == "omega_to_infinity"
    kx, cx = _leading(X, high)
    ky, cy = _leading(Y, high)
    if kx is None and ky is None:
        raise ZeroVector(f"stability vector vanishes identically ({kind})")
    if ky is None or (kx is not None and ((kx > ky) if high else (kx < ky))):
        direction, dominated = (math.copysign(1.0, cx), 0.0), "chi"
    elif kx is None or ((ky > kx) if high else (ky < kx)):
        direction, dominated = (0.0, math.copysign(1.0, cy)), "upsilon"
    else:
        r = math.hypot(cx, cy)
        direction, dominated = (cx / r, cy / r), "both"
    return LimitRecord(kind, direction, wrap_angle(*direction), dominated,
                       loop_origin_order, (kx, ky))


# --------------------------------------------------------------- sweeping


@dataclass(frozen=True)
class FrequencyGrid:
    """Log-spaced grid; extended by whole decades until the end angles match
    the analytic limits within ``limit_tol_deg``."""

    wmin: float = 1e-2
    wmax: float = 1e6
    points: int = 4000
    auto_extend: bool = True
    max_extra_decades: int = 10
    limit_tol_deg: float = 1.0

    def __post_init__(self):
        if not 0 < self.wmin < self.wmax:
            raise ValueError("need 0 < wmin < wmax")
        if self.points < 2:
            raise ValueError("need at least two grid points")
        if self.points / math.log10(self.wmax / self.wmin) < 2:
            raise ValueError("grid must have at least 2 points per decade")

    @property
    def per_decade(self) -> float:
        return (self.points - 1) / math.log10(self.wmax / self.wmin)

    def omegas(self) -> np.ndarray:
        return np.logspace(math.log10(self.wmin), math.log10(self.wmax), self.points)

    def refined(self, factor: int = 2) -> "FrequencyGrid":
        return FrequencyGrid(self.wmin, self.wmax, (self.points - 1) * factor + 1,
                             self.auto_extend, self.max_extra_decades, self.limit_tol_deg)


@dataclass(frozen=True)
class NSVSample:
    omega: float
    chi: float
    upsilon: float
    theta: float
    kind: int = GRID_SAMPLE

    @property
    def is_zero_vector(self) -> bool:
        return math.isnan(self.theta)


@dataclass(frozen=True, eq=False)
class NSVCurve:
    """Sampled stability vector plus its analytic end directions.

    Samples are stored column-wise. Polished zero crossings of ``chi`` and of
    ``upsilon`` are merged into the samples (``kind`` 1 and 2) with the
    vanishing component set to exactly zero.
    """

    omega: np.ndarray
    chi: np.ndarray
    upsilon: np.ndarray
    theta: np.ndarray
    kind: np.ndarray
    limit_low: LimitRecord
    limit_high: LimitRecord
    grid: FrequencyGrid
    extended: tuple[int, int] = (0, 0)
    converged: tuple[bool, bool] = (True, True)

    def __len__(self):
        return self.omega.size

    @property
    def samples(self) -> list[NSVSample]:
        return [NSVSample(float(w), float(x), float(y), float(t), int(k))
                for w, x, y, t, k in zip(self.omega, self.chi, self.upsilon, self.theta, self.kind)]

    @property
    def zero_vector_mask(self) -> np.ndarray:
        return np.isnan(self.theta)

    @property
    def chi_zeros(self) -> np.ndarray:
        return self.omega[self.kind == CHI_ZERO]

    @property
    def upsilon_zeros(self) -> np.ndarray:
        return self.omega[self.kind == UPSILON_ZERO]

    def with_limits(self):
        """``(chi, upsilon, theta, is_chi_zero, is_ups_zero)`` including the two
        limit directions as end samples at ``w = 0`` and ``w = inf``."""
        lo, hi = self.limit_low.direction, self.limit_high.direction
        chi = np.concatenate([[lo[0]], self.chi, [hi[0]]])
        ups = np.concatenate([[lo[1]], self.upsilon, [hi[1]]])
        theta = np.concatenate([[self.limit_low.angle], self.theta, [self.limit_high.angle]])
        return chi, ups, theta, chi == 0.0, ups == 0.0

    def angle_csv(self) -> str:
        lines = ["omega_rad_s,theta_deg"]
        for w, t in zip(self.omega, self.theta):
            lines.append(f"{w:.6g},{math.degrees(t):.6g}")
        return "\n".join(lines) + "\n"


def _evaluate(L: RationalTF, C_R: RationalTF, w: np.ndarray):
    try:
        Lv = tf_eval(L, w)
        Cv = tf_eval(C_R, w)
    except PoleAtFrequency as exc:
        raise PoleOnGrid(str(exc)) from None
    return nsv_at(Lv, Cv)


def _angle_gap(a: float, b: float) -> float:
    d = (a - b + math.pi) % (2 * math.pi) - math.pi
    return abs(d)


def _decade(w0: float, per_decade: float, down: bool) -> np.ndarray:
    n = max(2, int(math.ceil(per_decade)))
    if down:
        return np.logspace(math.log10(w0) - 1, math.log10(w0), n + 1)[:-1]
    return np.logspace(math.log10(w0), math.log10(w0) + 1, n + 1)[1:]


def _polish(f, a: float, b: float, xtol_rel: float) -> float:
    # bracketing search in log-frequency
    g = lambda u: f(math.exp(u))
    u = brentq(g, math.log(a), math.log(b), xtol=xtol_rel * 1e-2, rtol=4 * np.finfo(float).eps)
    return math.exp(u)


def _crossings(w, v, f, xtol_rel):
    s = np.sign(v)
    roots = list(w[s == 0])
    idx = np.flatnonzero(s[:-1] * s[1:] < 0)
    for i in idx:
        roots.append(_polish(f, w[i], w[i + 1], xtol_rel))
    return np.array(sorted(roots))


def sweep(L: RationalTF, C_R: RationalTF, grid: FrequencyGrid = FrequencyGrid(),
          loop: Optional[RationalTF] = None, xtol_rel: float = 1e-6) -> NSVCurve:
    """Sample the stability vector and attach the analytic end directions."""
    n_loop = origin_pole_order(loop) if loop is not None else 0
    low = limit_record(L, C_R, "omega_to_zero", n_loop)
    high = limit_record(L, C_R, "omega_to_infinity", n_loop)

    w = grid.omegas()
    chi, ups = _evaluate(L, C_R, w)
    extended = [0, 0]
    converged = [True, True]
    if grid.auto_extend:
        tol = math.radians(grid.limit_tol_deg)
        for end, rec in ((0, low), (1, high)):
            while True:
                i = 0 if end == 0 else -1
                th = wrap_angles(chi[i], ups[i])
                if not np.isnan(th) and _angle_gap(float(th), rec.angle) <= tol:
                    break
                if extended[end] >= grid.max_extra_decades:
                    converged[end] = False
                    break
                new = _decade(w[i], grid.per_decade, down=(end == 0))
                nx, ny = _evaluate(L, C_R, new)
                if end == 0:
                    w, chi, ups = np.r_[new, w], np.r_[nx, chi], np.r_[ny, ups]
                else:
                    w, chi, ups = np.r_[w, new], np.r_[chi, nx], np.r_[ups, ny]
                extended[end] += 1

    def chi_at(x):
        return _evaluate(L, C_R, np.array([x]))[0][0]

    def ups_at(x):
        return _evaluate(L, C_R, np.array([x]))[1][0]

    m_roots = _crossings(w, chi, chi_at, xtol_rel)
    q_roots = _crossings(w, ups, ups_at, xtol_rel)
    kinds = np.zeros(w.size, dtype=int)
    parts_w, parts_x, parts_y, parts_k = [w], [chi], [ups], [kinds]
    if m_roots.size:
        _, y = _evaluate(L, C_R, m_roots)
        parts_w.append(m_roots); parts_x.append(np.zeros(m_roots.size))
        parts_y.append(y); parts_k.append(np.full(m_roots.size, CHI_ZERO))
    if q_roots.size:
        x, _ = _evaluate(L, C_R, q_roots)
        parts_w.append(q_roots); parts_x.append(x)
        parts_y.append(np.zeros(q_roots.size)); parts_k.append(np.full(q_roots.size, UPSILON_ZERO))
    w_all = np.concatenate(parts_w)
    x_all = np.concatenate(parts_x)
    y_all = np.concatenate(parts_y)
    k_all = np.concatenate(parts_k)
    # grid samples that are themselves exact zeros become crossing samples
    k_all[(k_all == GRID_SAMPLE) & (x_all == 0.0)] = CHI_ZERO
    k_all[(k_all == GRID_SAMPLE) & (y_all == 0.0)] = UPSILON_ZERO
    order = np.lexsort((k_all, w_all))
    w_all, x_all, y_all, k_all = w_all[order], x_all[order], y_all[order], k_all[order]
    keep = np.r_[True, np.diff(w_all) > 0]
    w_all, x_all, y_all, k_all = w_all[keep], x_all[keep], y_all[keep], k_all[keep]
    theta = wrap_angles(x_all, y_all)
    return NSVCurve(w_all, x_all, y_all, theta, k_all, low, high, grid,
                    tuple(extended), tuple(converged))


def extremal_angles(curve: NSVCurve) -> tuple[float, float]:
    """Smallest and largest angle over the samples and both limit directions."""
    if curve.zero_vector_mask.any():
        w = curve.omega[curve.zero_vector_mask][0]
        raise ZeroVectorEncountered(f"stability vector vanishes at w={w:g}")
    _, _, theta, _, _ = curve.with_limits()
    return float(theta.min()), float(theta.max())


# ----------------------------------------------------------- classification


@dataclass
class ClassificationReport:
    """Sets, ratios, Type flags and verdict for one system.

    ``M`` and ``Q`` hold the frequencies where ``chi`` resp. ``upsilon``
    vanish. ``I1`` .. ``I4`` are frequency intervals whose vector angle lies
    in the open quadrant of the same number. Ratios are ``None`` when their
    defining set is empty.
    """

    M: list[float] = field(default_factory=list)
    Q: list[float] = field(default_factory=list)
    I1: list[tuple[float, float]] = field(default_factory=list)
    I2: list[tuple[float, float]] = field(default_factory=list)
    I3: list[tuple[float, float]] = field(default_factory=list)
    I4: list[tuple[float, float]] = field(default_factory=list)
    theta1: Optional[float] = None
    theta2: Optional[float] = None
    delta1: Optional[float] = None
    psi1: Optional[float] = None
    delta2: Optional[float] = None
    psi2: Optional[float] = None
    upsilon_on_M: list[float] = field(default_factory=list)
    chi_on_Q: list[float] = field(default_factory=list)
    type_I: Optional[bool] = None
    type_II: Optional[bool] = None
    verdict: Optional[Verdict] = None
    evidence: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    limit_low: Optional[LimitRecord] = None
    limit_high: Optional[LimitRecord] = None
    label: str = ""

    def to_dict(self) -> dict:
        def deg(x):
            return None if x is None else math.degrees(x)

        return {
            "label": self.label,
            "verdict": None if self.verdict is None else self.verdict.value,
            "type_I": self.type_I,
            "type_II": self.type_II,
            "M": list(self.M),
            "Q": list(self.Q),
            "I1": [list(i) for i in self.I1],
            "I2": [list(i) for i in self.I2],
            "I3": [list(i) for i in self.I3],
            "I4": [list(i) for i in self.I4],
            "theta1_deg": deg(self.theta1),
            "theta2_deg": deg(self.theta2),
            "delta1": self.delta1,
            "psi1": self.psi1,
            "delta2": self.delta2,
            "psi2": self.psi2,
            "upsilon_on_M": list(self.upsilon_on_M),
            "chi_on_Q": list(self.chi_on_Q),
            "limit_low": None if self.limit_low is None else self.limit_low.to_dict(),
            "limit_high": None if self.limit_high is None else self.limit_high.to_dict(),
            "evidence": self.evidence,
            "notes": list(self.notes),
        }


def _intervals(omega: np.ndarray, mask: np.ndarray) -> list[tuple[float, float]]:
    """Runs of ``mask`` over the (sorted) samples, widened to the neighbouring
    samples; runs touching the ends extend to 0 / inf."""
    out = []
    n = mask.size
    i = 0
    while i < n:
        if not mask[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and mask[j + 1]:
            j += 1
        lo = 0.0 if i == 0 else float(omega[i - 1])
        hi = math.inf if j == n - 1 else float(omega[j + 1])
        out.append((lo, hi))
        i = j + 1
    return out


def _quadrants(theta: np.ndarray):
    q1 = (theta > 0) & (theta < HALF_PI)
    q2 = (theta > HALF_PI) & (theta < math.pi)
    q3 = (theta > math.pi) & (theta < 3 * HALF_PI)
    q4 = (theta > -HALF_PI) & (theta < 0)
    return q1, q2, q3, q4


def classify_sets(curve: NSVCurve, zero_tol: float = 0.0) -> ClassificationReport:
    """Zero sets, quadrant intervals and the ratio extrema of a sweep.

    ``zero_tol`` additionally treats grid samples with ``|component| <=
    zero_tol`` as members of the corresponding zero set.
    """
    rep = ClassificationReport(limit_low=curve.limit_low, limit_high=curve.limit_high)
    rep.M = [float(w) for w in curve.chi_zeros]
    rep.Q = [float(w) for w in curve.upsilon_zeros]
    rep.upsilon_on_M = [float(y) for y in curve.upsilon[curve.kind == CHI_ZERO]]
    rep.chi_on_Q = [float(x) for x in curve.chi[curve.kind == UPSILON_ZERO]]
    if zero_tol > 0:
        extra = (curve.kind == GRID_SAMPLE) & (np.abs(curve.chi) <= zero_tol)
        rep.M += [float(w) for w in curve.omega[extra]]
        rep.upsilon_on_M += [float(y) for y in curve.upsilon[extra]]
        extra = (curve.kind == GRID_SAMPLE) & (np.abs(curve.upsilon) <= zero_tol)
        rep.Q += [float(w) for w in curve.omega[extra]]
        rep.chi_on_Q += [float(x) for x in curve.chi[extra]]

    theta = curve.theta
    q1, q2, q3, q4 = _quadrants(theta)
    rep.I1 = _intervals(curve.omega, q1)
    rep.I2 = _intervals(curve.omega, q2)
    rep.I3 = _intervals(curve.omega, q3)
    rep.I4 = _intervals(curve.omega, q4)

    chi, ups, th, _, _ = curve.with_limits()
    q1, q2, q3, q4 = _quadrants(th)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(ups / chi)
    rep.delta1 = float(ratio[q4].max()) if q4.any() else None
    rep.psi1 = float(ratio[q2].min()) if q2.any() else None
    rep.delta2 = float(ratio[q3].max()) if q3.any() else None
    rep.psi2 = float(ratio[q1].min()) if q1.any() else None
    rep.label = ""
    if not curve.zero_vector_mask.any():
        rep.theta1, rep.theta2 = extremal_angles(curve)
    else:
        rep.notes.append("zero-vector: stability vector vanishes on the grid")
    if not all(curve.converged):
        rep.notes.append("grid end angle did not reach the analytic limit within tolerance")
    return rep


def _marginal_values(values, bound_ok, margin):
    return any(abs(v) <= margin for v in values) and bound_ok


def _angle_test(theta1, theta2, lo, hi):
    ok = lo < theta1 < hi and lo < theta2 < hi and theta2 - theta1 < math.pi
    near = min(abs(theta1 - lo), abs(theta1 - hi), abs(theta2 - lo), abs(theta2 - hi),
               abs(math.pi - (theta2 - theta1))) <= ANGLE_MARGIN
    return ok, near


def _component_evidence(curve: NSVCurve):
    chi, ups, theta, on_m, on_q = curve.with_limits()
    return chi, ups, theta, on_m, on_q, _quadrants(theta)


def is_type_I(report: ClassificationReport, curve: NSVCurve) -> tuple[bool, dict]:
    """Type I membership from the set conditions, cross-checked against the
    equivalent angle test ``-pi/2 < theta1, theta2 < pi``, span ``< pi``."""
    if curve.zero_vector_mask.any():
        ev = {"zero_vector": True, "result": False}
        report.evidence["type_I"] = ev
        report.type_I = False
        return False, ev
    chi, ups, theta, on_m, on_q, (q1, q2, q3, q4) = _component_evidence(curve)
    c1 = bool(np.all(ups[on_m] > COMPONENT_MARGIN))
    c2 = bool(np.all(chi[on_q] > COMPONENT_MARGIN))
    c3a = bool(np.all(ups >= 0))
    c3b = bool(np.all(chi >= 0))
    delta1 = report.delta1 if report.delta1 is not None else 0.0
    psi1 = report.psi1 if report.psi1 is not None else math.inf
    c3c = (not q3.any()) and delta1 < psi1
    by_sets = c1 and c2 and (c3a or c3b or c3c)
    theta1, theta2 = extremal_angles(curve)
    by_angles, near = _angle_test(theta1, theta2, -HALF_PI, math.pi)
    marginal = near or _marginal_values(list(ups[on_m]) + list(chi[on_q]), True, COMPONENT_MARGIN)
    ev = {"cond1_upsilon_pos_on_M": c1, "cond2_chi_pos_on_Q": c2,
          "cond3a_upsilon_nonneg": c3a, "cond3b_chi_nonneg": c3b,
          "cond3c_ratio": bool(c3c), "I3_empty": not bool(q3.any()),
          "by_sets": by_sets, "by_angles": by_angles, "marginal": bool(marginal)}
    result = _reconcile("Type I", by_sets, by_angles, marginal, report)
    ev["result"] = result
    report.evidence["type_I"] = ev
    report.type_I = result
    return result, ev


def is_type_II(report: ClassificationReport, curve: NSVCurve, loop: RationalTF) -> tuple[bool, dict]:
    """Type II membership (requires no pole of ``loop`` at the origin)."""
    no_origin = origin_pole_order(loop) == 0
    if curve.zero_vector_mask.any():
        ev = {"zero_vector": True, "cond1_no_origin_pole": no_origin, "result": False}
        report.evidence["type_II"] = ev
        report.type_II = False
        return False, ev
    chi, ups, theta, on_m, on_q, (q1, q2, q3, q4) = _component_evidence(curve)
    c2 = bool(np.all(ups[on_m] > COMPONENT_MARGIN))
    c3 = bool(np.all(chi[on_q] < -COMPONENT_MARGIN))
    c4a = bool(np.all(ups >= 0))
    c4b = bool(np.all(chi <= 0))
    delta2 = report.delta2 if report.delta2 is not None else 0.0
    psi2 = report.psi2 if report.psi2 is not None else math.inf
    c4c = (not q4.any()) and delta2 < psi2
    freq_sets = c2 and c3 and (c4a or c4b or c4c)
    theta1, theta2 = extremal_angles(curve)
    freq_angles, near = _angle_test(theta1, theta2, 0.0, 3 * HALF_PI)
    marginal = near or _marginal_values(list(ups[on_m]) + list(chi[on_q]), True, COMPONENT_MARGIN)
    ev = {"cond1_no_origin_pole": no_origin, "cond2_upsilon_pos_on_M": c2,
          "cond3_chi_neg_on_Q": c3, "cond4a_upsilon_nonneg": c4a,
          "cond4b_chi_nonpos": c4b, "cond4c_ratio": bool(c4c), "I4_empty": not bool(q4.any()),
          "by_sets": freq_sets, "by_angles": freq_angles, "marginal": bool(marginal)}
    result = no_origin and _reconcile("Type II", freq_sets, freq_angles, marginal, report)
    ev["result"] = result
    report.evidence["type_II"] = ev
    report.type_II = result
    return result, ev


def _reconcile(name, by_sets, by_angles, marginal, report) -> bool:
    if by_sets == by_angles and not (marginal and by_sets):
        return by_sets
    if marginal:
        note = f"marginal: {name} conditions hold only within the strictness margin"
        if note not in report.notes:
            report.notes.append(note)
        return False
    raise InternalInconsistency(
        f"{name}: set conditions give {by_sets} but the angle test gives {by_angles}")


def analyze(L: RationalTF, C_R: RationalTF, loop: RationalTF,
            grid: FrequencyGrid = FrequencyGrid()) -> tuple[ClassificationReport, NSVCurve]:
    """Sweep and classify without the hypothesis checks."""
    curve = sweep(L, C_R, grid, loop=loop)
    rep = classify_sets(curve)
    is_type_I(rep, curve)
    is_type_II(rep, curve, loop)
    return rep, curve


def theorem1_verdict(system, grid: FrequencyGrid = FrequencyGrid(),
                     return_curve: bool = False):
    """UBIBS verdict for a :class:`~reset_verdict.system.SystemDescription`.

    Stable when the base linear loop is stable without pole-zero cancellation
    and the system is of Type I or Type II; hypothesis failures are reported
    as ``HYPOTHESIS_FAILED``; otherwise the system is not quadratically stable.
    """
    elem = system.reset_element
    if elem.is_linear:
        raise ValueError("gamma = 1 removes the reset action; nothing to certify")
    if elem.kind not in (ResetKind.GFORE, ResetKind.PCI):
        raise ValueError(f"unsupported reset element {elem.kind}")
    loop = system.loop
    C_R = base_tf(elem)
    L = system.open_loop

    stable = base_linear_closed_loop_stable(L)
    cancel = has_pole_zero_cancellation(L)
    rep, curve = analyze(L, C_R, loop, grid)
    rep.label = system.label
    rep.evidence["hypothesis"] = {
        "base_linear_stable": stable,
        "no_pole_zero_cancellation": not cancel,
        "loop_origin_pole_order": origin_pole_order(loop),
    }
    if not stable or cancel:
        rep.verdict = Verdict.HYPOTHESIS_FAILED
    elif rep.type_I or rep.type_II:
        rep.verdict = Verdict.UBIBS_STABLE
    else:
        rep.verdict = Verdict.NOT_QUADRATICALLY_STABLE
    return (rep, curve) if return_curve else rep
