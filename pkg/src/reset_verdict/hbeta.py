"""Brute-force H-beta check.

For a candidate ``(beta, rho')`` the transfer function

    H(s) = (beta * L(s) + rho' * C_R(s)) / (1 + L(s))

must have a strictly positive real part on the whole imaginary axis, with the
appropriate limits at ``w -> 0`` and ``w -> inf``. This module tests that
directly, point by point, and scans ``(beta, rho')`` for feasible pairs. It
does not use the angle-span classification in :mod:`reset_verdict.nsv`, which
makes it an independent check of that classification.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .elements import ResetKind, base_tf
from .errors import ClosedLoopPoleOnAxis
from .lti import RationalTF, base_linear_closed_loop_stable, origin_pole_order, poly_roots, tf_eval

MARGIN = 1e-9


@dataclass(frozen=True)
class HBetaPoint:
    beta: float
    rho_p: float

    def __post_init__(self):
        if not (math.isfinite(self.beta) and math.isfinite(self.rho_p)):
            raise ValueError("beta and rho' must be finite")
        if not self.rho_p > 0:
            raise ValueError("rho' must be positive")

    @property
    def xi(self) -> tuple[float, float]:
        return (self.beta, self.rho_p)


def re_H(Lval, CRval, p, tol: float = 1e-14):
    """Real part of ``H(jw)`` from ``L(jw) = a + jb`` and ``C_R(jw) = a_R + j b_R``."""
    beta, rho_p = (p.beta, p.rho_p) if isinstance(p, HBetaPoint) else p
    L = np.asarray(Lval, dtype=complex)
    C = np.asarray(CRval, dtype=complex)
    a, b = L.real, L.imag
    aR, bR = C.real, C.imag
    den = (a + 1) ** 2 + b ** 2
    if np.any(den <= tol):
        raise ClosedLoopPoleOnAxis("1 + L(jw) vanishes on the grid")
    num = beta * ((a + 0.5) ** 2 + b ** 2 - 0.25) + rho_p * (aR * a + bR * b + aR)
    out = num / den
    return float(out) if out.ndim == 0 else out


def h_freqresp(system, p, omega) -> np.ndarray:
    """``H(jw)`` evaluated from its closed-loop transfer-function form."""
    beta, rho_p = (p.beta, p.rho_p) if isinstance(p, HBetaPoint) else p
    L = tf_eval(system.open_loop, np.atleast_1d(omega))
    C = tf_eval(base_tf(system.reset_element), np.atleast_1d(omega))
    return (beta * L + rho_p * C) / (1 + L)


def default_grid(L: RationalTF, C_R: RationalTF, per_decade: int = 400,
                 margin_decades: float = 3.0) -> np.ndarray:
    """Log grid spanning every pole/zero magnitude of ``L`` and ``C_R`` with
    ``margin_decades`` to spare on both sides."""
    mags = []
    for tf in (L, C_R):
        for coeffs in (tf.num, tf.den):
            if len(coeffs) > 1 and any(coeffs):
                r = np.abs(poly_roots(coeffs))
                mags.extend(r[r > 0])
    mags = np.array(mags) if mags else np.array([1.0])
    lo = math.log10(mags.min()) - margin_decades
    hi = math.log10(mags.max()) + margin_decades
    n = int(math.ceil((hi - lo) * per_decade)) + 1
    return np.logspace(lo, hi, n)


class HBetaProblem:
    """Frequency data of one system, prepared for many ``(beta, rho')`` checks."""

    def __init__(self, system, omega: Optional[np.ndarray] = None):
        elem = system.reset_element
        self.system = system
        self.kind = elem.kind
        self.omega_r = elem.omega_r
        self.loop = system.loop
        self.L = system.open_loop
        self.C_R = base_tf(elem)
        self.loop_origin_order = origin_pole_order(self.loop)
        self.L_origin_order = origin_pole_order(self.L)
        # H shares its poles with the base linear closed loop; SPR needs them stable
        self.h_stable = base_linear_closed_loop_stable(self.L)
        w = default_grid(self.L, self.C_R) if omega is None else np.asarray(omega, float)
        if self.L_origin_order == 0 and w[0] > 0:
            w = np.r_[0.0, w]
        self.omega = w
        self.Lval = tf_eval(self.L, w)
        self.CRval = tf_eval(self.C_R, w)
        a, b = self.Lval.real, self.Lval.imag
        aR, bR = self.CRval.real, self.CRval.imag
        self.den = (a + 1) ** 2 + b ** 2
        if np.any(self.den <= 1e-14):
            if self.h_stable:
                raise ClosedLoopPoleOnAxis("1 + L(jw) vanishes on the grid")
            # unstable anyway; keep the arrays finite, nothing will be feasible
            self.den = np.maximum(self.den, 1e-14)
        # numerator coefficients of beta and rho' in Re(H) * |1 + L|^2
        self.cb = (a + 0.5) ** 2 + b ** 2 - 0.25
        self.cr = aR * a + bR * b + aR
        self.a_inf = self._a_inf()
        # frequencies whose constraint normals are most extreme reject most
        # candidates; checking them first is a cheap necessary condition
        psi = np.arctan2(self.cr, self.cb)
        order = np.argsort(psi)
        pick = np.r_[order[:32], order[-32:], np.linspace(0, w.size - 1, 64).astype(int)]
        self._probe = np.unique(pick)

    def _a_inf(self) -> Optional[float]:
        """``lim w^2 Re L(jw)`` when L has relative degree two."""
        if self.L.relative_degree != 2:
            return None
        return -self.L.num[-1] / self.L.den[-1]

    def re_h(self, p) -> np.ndarray:
        return re_H(self.Lval, self.CRval, p)

    def limit_checks(self, p) -> bool:
        """Analytic w -> 0 and w -> inf conditions.

        Each strict inequality ``sum(terms) > 0`` is tested against a margin
        relative to ``sum(|terms|)``, so the test is invariant under positive
        scaling of ``(beta, rho')``.
        """
        beta, rho_p = (p.beta, p.rho_p) if isinstance(p, HBetaPoint) else p
        if not rho_p > 0:
            return False

        def positive(*terms):
            return sum(terms) > MARGIN * sum(abs(t) for t in terms)

        # w -> 0
        if self.kind is ResetKind.GFORE:
            if self.L_origin_order >= 1 and not positive(beta):
                return False
        else:
            if self.loop_origin_order >= 1:
                if not positive(beta):
                    return False
            else:
                # L ~ loop(0) * w_r / (jw): Re H -> beta + rho' / loop(0)
                l0 = self.loop.num[0] / self.loop.den[0]
                if not positive(beta, rho_p / l0):
                    return False
        # w -> inf
        if self.kind is ResetKind.GFORE and self.a_inf is not None:
            return positive(beta * self.a_inf, rho_p * self.omega_r ** 2)
        return True  # higher relative degree, or H(inf) = rho' > 0 for PCI

    def feasible(self, p) -> bool:
        beta, rho_p = (p.beta, p.rho_p) if isinstance(p, HBetaPoint) else p
        if not (rho_p > 0 and self.h_stable):
            return False
        tb, tr = beta * self.cb, rho_p * self.cr
        # strict positivity, relative to the size of the two terms
        if not np.all(tb + tr > MARGIN * (np.abs(tb) + np.abs(tr))):
            return False
        return self.limit_checks((beta, rho_p))

    def feasible_many(self, beta: np.ndarray, rho_p: np.ndarray, chunk: int = 1024) -> np.ndarray:
        """Vectorised :meth:`feasible` over paired arrays."""
        beta = np.asarray(beta, float).ravel()
        rho_p = np.asarray(rho_p, float).ravel()
        out = np.zeros(beta.size, dtype=bool)
        if not self.h_stable:
            return out
        def strict(bb, rr, cb, cr):
            tb = bb[:, None] * cb[None, :]
            tr = rr[:, None] * cr[None, :]
            return np.all(tb + tr > MARGIN * (np.abs(tb) + np.abs(tr)), axis=1)

        cb_p, cr_p = self.cb[self._probe], self.cr[self._probe]
        for s in range(0, beta.size, chunk):
            bb, rr = beta[s:s + chunk], rho_p[s:s + chunk]
            ok = (rr > 0) & strict(bb, rr, cb_p, cr_p)
            live = np.flatnonzero(ok)
            if live.size:
                ok[live] = strict(bb[live], rr[live], self.cb, self.cr)
            idx = np.flatnonzero(ok)
            for i in idx:
                ok[i] = self.limit_checks((bb[i], rr[i]))
            out[s:s + chunk] = ok
        return out


def limit_checks(system, p) -> bool:
    return HBetaProblem(system).limit_checks(p)


def feasible(system, p, grid: Optional[np.ndarray] = None) -> bool:
    return HBetaProblem(system, grid).feasible(p)


@dataclass
class FeasibleRegion:
    """Result of a ``(beta, rho')`` scan."""

    beta_grid: np.ndarray
    rho_grid: np.ndarray
    mask: np.ndarray  # shape (len(beta_grid), len(rho_grid))
    direction_angles: np.ndarray
    direction_mask: np.ndarray
    ratio_interval: Optional[tuple[float, float]] = None
    ratio_convex: Optional[bool] = None
    ratio_violations: list[float] = field(default_factory=list)
    label: str = ""
    notes: list[str] = field(default_factory=list)

    @property
    def feasible_points(self) -> list[tuple[float, float]]:
        bi, ri = np.nonzero(self.mask)
        pts = [(float(self.beta_grid[i]), float(self.rho_grid[j])) for i, j in zip(bi, ri)]
        return pts + self.direction_points

    @property
    def direction_points(self) -> list[tuple[float, float]]:
        return [_direction_point(t) for t in self.direction_angles[self.direction_mask]]

    @property
    def nonempty(self) -> bool:
        return bool(self.mask.any() or self.direction_mask.any())

    @property
    def direction_interval(self) -> Optional[tuple[float, float]]:
        """Range of feasible ``atan2(rho', beta)`` in radians."""
        if not self.direction_mask.any():
            return None
        t = self.direction_angles[self.direction_mask]
        return float(t.min()), float(t.max())

    def to_dict(self) -> dict:
        di = self.direction_interval
        return {
            "label": self.label,
            "nonempty": self.nonempty,
            "beta_range": [float(self.beta_grid.min()), float(self.beta_grid.max())],
            "rho_range": [float(self.rho_grid.min()), float(self.rho_grid.max())],
            "grid_shape": list(self.mask.shape),
            "n_feasible_grid_points": int(self.mask.sum()),
            "ratio_interval_beta_pos": None if self.ratio_interval is None else list(self.ratio_interval),
            "ratio_convex": self.ratio_convex,
            "ratio_violations": list(self.ratio_violations),
            "direction_interval_deg": None if di is None else [math.degrees(di[0]), math.degrees(di[1])],
            "notes": list(self.notes),
        }

    def to_csv(self) -> str:
        lines = ["beta,rho_prime,feasible"]
        for i, b in enumerate(self.beta_grid):
            for j, r in enumerate(self.rho_grid):
                lines.append(f"{b:.6g},{r:.6g},{int(self.mask[i, j])}")
        return "\n".join(lines) + "\n"


def _direction_point(theta: float, beta_max: float = 10.0, rho_max: float = 100.0):
    c, s = math.cos(theta), math.sin(theta)
    scale = min(beta_max / abs(c) if c else math.inf, rho_max / s)
    scale = min(scale, 1.0)
    return (scale * c, scale * s)


def worker_threads() -> int:
    try:
        return max(1, int(os.environ.get("RESET_VERDICT_THREADS", "1")))
    except ValueError:
        return 1


def beta_axis(beta_min: float, beta_max: float, n: int) -> np.ndarray:
    """Symmetric log-spaced beta values (plus zero) covering the range."""
    half = max(2, n // 2)
    top = max(abs(beta_min), abs(beta_max))
    mags = np.logspace(math.log10(top) - 4, math.log10(top), half)
    vals = np.concatenate([-mags[::-1], [0.0], mags])
    return vals[(vals >= beta_min) & (vals <= beta_max)]


def ratio_interval(problem: HBetaProblem, seed: float, rel_tol: float = 1e-6,
                   lo_limit: float = 1e-9, hi_limit: float = 1e9) -> tuple[float, float]:
    """Feasible ``rho'/beta`` interval at ``beta = 1`` around a feasible seed."""
    f = lambda r: problem.feasible((1.0, r))
    if not f(seed):
        raise ValueError("seed ratio is not feasible")

    def bisect(good, bad):
        while abs(good - bad) > rel_tol * max(good, bad):
            mid = math.sqrt(good * bad)
            if f(mid):
                good = mid
            else:
                bad = mid
        return good

    lo = seed
    while lo > lo_limit and f(lo / 2):
        lo /= 2
    lower = 0.0 if lo <= lo_limit else bisect(lo, lo / 2)
    hi = seed
    while hi < hi_limit and f(hi * 2):
        hi *= 2
    upper = math.inf if hi >= hi_limit else bisect(hi, hi * 2)
    return lower, upper


def scan(system, beta_range: tuple[float, float] = (-10.0, 10.0),
         rho_range: tuple[float, float] = (1e-3, 100.0), resolution: int = 200,
         n_directions: int = 20001, omega: Optional[np.ndarray] = None,
         rel_tol: float = 1e-6) -> FeasibleRegion:
    """Scan ``(beta, rho')`` for points satisfying the positivity check.

    The box is sampled with ``resolution`` log-spaced values per axis (beta
    symmetric around zero). Because feasibility only depends on the direction
    of ``(beta, rho')``, a fine sweep over directions inside the box is added
    so narrow feasible cones are not missed. For ``beta > 0`` the feasible
    ``rho'/beta`` interval is refined by bisection.
    """
    problem = HBetaProblem(system, omega)
    betas = beta_axis(beta_range[0], beta_range[1], resolution)
    rhos = np.logspace(math.log10(rho_range[0]), math.log10(rho_range[1]), resolution)
    B, R = np.meshgrid(betas, rhos, indexing="ij")

    flat_b, flat_r = B.ravel(), R.ravel()
    n_threads = worker_threads()
    if n_threads > 1:
        parts = np.array_split(np.arange(flat_b.size), n_threads)
        with ThreadPoolExecutor(n_threads) as pool:
            res = list(pool.map(lambda ix: problem.feasible_many(flat_b[ix], flat_r[ix]), parts))
        mask = np.concatenate(res).reshape(B.shape)
    else:
        mask = problem.feasible_many(flat_b, flat_r).reshape(B.shape)

    angles = np.linspace(0, math.pi, n_directions + 2)[1:-1]
    dpts = np.array([_direction_point(t, max(map(abs, beta_range)), rho_range[1]) for t in angles])
    inside = (dpts[:, 0] >= beta_range[0]) & (dpts[:, 0] <= beta_range[1])
    dmask = np.zeros(angles.size, dtype=bool)
    dmask[inside] = problem.feasible_many(dpts[inside, 0], dpts[inside, 1])

    region = FeasibleRegion(betas, rhos, mask, angles, dmask, label=system.label)
    if not problem.h_stable:
        region.notes.append("base linear closed loop is unstable; no pair can make H strictly positive real")

    sel = mask & (B > 0)
    pos_ratios = list(R[sel] / B[sel])
    pos_ratios += [r / b for b, r in dpts[dmask] if b > 0]
    if pos_ratios:
        seed = float(np.median(pos_ratios))
        if not problem.feasible((1.0, seed)):
            seed = float(pos_ratios[0])
        region.ratio_interval = ratio_interval(problem, seed, rel_tol)
        probe = np.unique(np.concatenate([np.logspace(-4, 4, 801), pos_ratios]))
        ok = problem.feasible_many(np.ones(probe.size), probe)
        idx = np.flatnonzero(ok)
        gaps = [float(probe[i]) for i in range(idx[0], idx[-1] + 1) if not ok[i]]
        region.ratio_convex = not gaps
        region.ratio_violations = gaps
        if gaps:
            region.notes.append("feasible rho'/beta set at beta = 1 is not an interval")
    return region


@dataclass(frozen=True)
class CrossCheck:
    status: str  # "consistent" | "inconsistent" | "skipped"
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status != "inconsistent"


def cross_check(report, region: FeasibleRegion) -> CrossCheck:
    """Compare the Type I/II classification with the oracle's scan."""
    from .nsv import Verdict

    if report.verdict is Verdict.HYPOTHESIS_FAILED:
        return CrossCheck("skipped", "base linear hypothesis fails; oracle not meaningful")
    typed = bool(report.type_I or report.type_II)
    if typed == region.nonempty:
        return CrossCheck("consistent", f"typed={typed}, oracle nonempty={region.nonempty}")
    marginal = any("marginal" in n for n in report.notes)
    return CrossCheck("inconsistent",
                      f"typed={typed} but oracle nonempty={region.nonempty}"
                      + (" (classification marginal)" if marginal else ""))
