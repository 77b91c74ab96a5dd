"""Real-coefficient rational transfer functions.

Coefficients are stored in ascending powers of ``s`` throughout the package
(``[a0, a1, a2]`` means ``a0 + a1*s + a2*s**2``), which is also the order used
in the JSON input files.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import (
    AmbiguousOriginPole,
    ImproperTransferFunction,
    PoleAtFrequency,
    RootFindingDiverged,
)

# relative tolerance for "root at origin" and "matching roots"
ROOT_TOL = 1e-7


def _trim(coeffs: Sequence[float]) -> tuple[float, ...]:
    c = [float(x) for x in coeffs]
    while len(c) > 1 and c[-1] == 0.0:
        c.pop()
    return tuple(c)


@dataclass(frozen=True)
class RationalTF:
    """``num(s) / den(s)`` with real coefficients in ascending powers of s."""

    num: tuple[float, ...]
    den: tuple[float, ...]

    def __post_init__(self):
        num = _trim(np.atleast_1d(np.asarray(self.num, dtype=float)))
        den = _trim(np.atleast_1d(np.asarray(self.den, dtype=float)))
        if not all(np.isfinite(num)) or not all(np.isfinite(den)):
            raise ValueError("transfer function coefficients must be finite")
        if den == (0.0,):
            raise ValueError("denominator must have a nonzero coefficient")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @classmethod
    def gain(cls, k: float) -> "RationalTF":
        return cls((k,), (1.0,))

    @property
    def num_array(self) -> np.ndarray:
        return np.array(self.num)

    @property
    def den_array(self) -> np.ndarray:
        return np.array(self.den)

    @property
    def num_degree(self) -> int:
        return -1 if self.num == (0.0,) else len(self.num) - 1

    @property
    def den_degree(self) -> int:
        return len(self.den) - 1

    @property
    def relative_degree(self) -> int:
        return self.den_degree - self.num_degree

    @property
    def is_proper(self) -> bool:
        return self.num_degree <= self.den_degree

    @property
    def is_strictly_proper(self) -> bool:
        return self.num_degree < self.den_degree

    def __call__(self, omega):
        return tf_eval(self, omega)

    def __mul__(self, other: "RationalTF") -> "RationalTF":
        if isinstance(other, (int, float)):
            other = RationalTF.gain(other)
        return tf_series(self, other)

    __rmul__ = __mul__

    def to_dict(self) -> dict:
        return {"num": list(self.num), "den": list(self.den)}

    @classmethod
    def from_dict(cls, data: dict) -> "RationalTF":
        return cls(tuple(data["num"]), tuple(data["den"]))


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Single-input single-output realization ``(A, B, C, D)``.

    ``B`` is stored as a flat length-n vector and ``C`` likewise; ``D`` is a
    scalar.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float).reshape(-1)
        C = np.asarray(self.C, dtype=float).reshape(-1)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError("A must be square")
        if B.shape != (n,) or C.shape != (n,):
            raise ValueError("B and C must have one entry per state")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", float(self.D))

    @property
    def order(self) -> int:
        return self.A.shape[0]

    def freqresp(self, omega) -> np.ndarray:
        """Evaluate ``C (jwI - A)^-1 B + D`` at each frequency."""
        w = np.atleast_1d(np.asarray(omega, dtype=float))
        n = self.order
        out = np.empty(w.shape, dtype=complex)
        eye = np.eye(n)
        for i, wi in enumerate(w):
            x = np.linalg.solve(1j * wi * eye - self.A, self.B.astype(complex))
            out[i] = self.C @ x + self.D
        return out


def _horner_rows(coeffs: np.ndarray, s: np.ndarray) -> np.ndarray:
    return P.polyval(s, coeffs)


def tf_eval(tf: RationalTF, omega, tol: float = 1e-13):
    """Frequency response ``num(jw)/den(jw)``.

    ``omega`` may be a scalar or an array of non-negative angular frequencies.
    For ``w > 1`` the reversed polynomials are evaluated at ``1/(jw)`` so that
    high powers of ``w`` never overflow.
    """
    w = np.asarray(omega, dtype=float)
    scalar = w.ndim == 0
    w = np.atleast_1d(w)
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("frequencies must be finite and non-negative")
    num, den = tf.num_array, tf.den_array
    n, m = len(num) - 1, len(den) - 1
    out = np.empty(w.shape, dtype=complex)

    lo = w <= 1.0
    if lo.any():
        s = 1j * w[lo]
        dv = _horner_rows(den, s)
        scale = _horner_rows(np.abs(den), np.abs(s))
        if np.any(np.abs(dv) <= tol * scale):
            raise PoleAtFrequency(f"denominator vanishes near w={w[lo][np.argmin(np.abs(dv))]:g}")
        out[lo] = _horner_rows(num, s) / dv
    hi = ~lo
    if hi.any():
        s = 1j * w[hi]
        z = 1.0 / s
        dv = _horner_rows(den[::-1], z)
        scale = _horner_rows(np.abs(den[::-1]), np.abs(z))
        if np.any(np.abs(dv) <= tol * scale):
            raise PoleAtFrequency(f"denominator vanishes near w={w[hi][np.argmin(np.abs(dv))]:g}")
        # s**(n-m) as w**k * j**k: a complex power would underflow to nan
        k = n - m
        out[hi] = _horner_rows(num[::-1], z) / dv * (w[hi] ** k * 1j ** (k % 4))
    return complex(out[0]) if scalar else out


def tf_series(a: RationalTF, b: RationalTF) -> RationalTF:
    """Series connection ``a * b``; common factors are kept."""
    return RationalTF(tuple(P.polymul(a.num_array, b.num_array)),
                      tuple(P.polymul(a.den_array, b.den_array)))


def poly_roots(coeffs: Sequence[float]) -> np.ndarray:
    """Roots of an ascending-order polynomial (companion eigenvalues).

    Exact zero low-order coefficients are returned as exact zero roots.
    """
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    if c.size == 0:
        raise ValueError("zero polynomial has no well-defined roots")
    k = 0
    while k < c.size - 1 and c[k] == 0.0:
        k += 1
    rest = c[k:]
    roots = P.polyroots(rest) if rest.size > 1 else np.array([], dtype=complex)
    roots = np.concatenate([np.zeros(k, dtype=complex), np.asarray(roots, dtype=complex)])
    if not np.all(np.isfinite(roots)):
        raise RootFindingDiverged("companion eigenvalues are not finite")
    return roots


def tf_poles(tf: RationalTF) -> np.ndarray:
    if tf.den_degree < 1:
        raise ValueError("constant denominator has no poles")
    return poly_roots(tf.den)


def tf_zeros(tf: RationalTF) -> np.ndarray:
    if tf.num_degree < 1:
        return np.array([], dtype=complex)
    return poly_roots(tf.num)


def _origin_multiplicity(coeffs: Sequence[float], tol: float) -> int:
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    if c.size <= 1:
        return 0
    roots = poly_roots(c)
    scale = max(1.0, float(np.max(np.abs(roots))))
    return int(np.sum(np.abs(roots) <= tol * scale))


def origin_pole_order(tf: RationalTF, tol: float = ROOT_TOL) -> int:
    """Number of poles at ``s = 0``."""
    n_den = _origin_multiplicity(tf.den, tol) if tf.den_degree >= 1 else 0
    if n_den == 0:
        return 0
    if tf.num_degree >= 1 and _origin_multiplicity(tf.num, tol) > 0:
        raise AmbiguousOriginPole("numerator and denominator both vanish at s=0")
    if tf.num_degree < 0:
        raise AmbiguousOriginPole("zero numerator")
    return n_den


def _roots_match(z: complex, p: complex, tol: float) -> bool:
    mag = max(abs(z), abs(p))
    if mag <= tol:
        return True
    return abs(z - p) <= tol * mag


def has_pole_zero_cancellation(tf: RationalTF, tol: float = ROOT_TOL) -> bool:
    zeros = tf_zeros(tf)
    if zeros.size == 0 or tf.den_degree < 1:
        return False
    poles = tf_poles(tf)
    return any(_roots_match(z, p, tol) for z in zeros for p in poles)


def closed_loop_poles(L: RationalTF) -> np.ndarray:
    """Roots of ``den_L + num_L`` (unity negative feedback)."""
    if not L.is_proper:
        raise ImproperTransferFunction("open loop must be proper")
    char = P.polyadd(L.den_array, L.num_array)
    return poly_roots(char)


def base_linear_closed_loop_stable(L: RationalTF) -> bool:
    return bool(np.all(closed_loop_poles(L).real < 0))


def realize(tf: RationalTF) -> StateSpace:
    """Controllable canonical realization of a proper transfer function."""
    if not tf.is_proper:
        raise ImproperTransferFunction("cannot realize an improper transfer function")
    den = tf.den_array
    n = len(den) - 1
    lead = den[-1]
    den = den / lead
    num = np.zeros(n + 1)
    num[: len(tf.num)] = np.array(tf.num) / lead
    D = num[n] if n >= 0 else 0.0
    rem = num[:n] - D * den[:n]
    if n == 0:
        return StateSpace(np.zeros((0, 0)), np.zeros(0), np.zeros(0), D)
    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -den[:n]
    B = np.zeros(n)
    B[-1] = 1.0
    return StateSpace(A, B, rem, D)


def balance(ss: StateSpace) -> StateSpace:
    """Diagonal similarity transform equilibrating ``[[A, B], [C, D]]``.

    Balancing the augmented matrix rather than ``A`` alone keeps the scaling
    finite when ``A`` has zero columns (poles at the origin).
    """
    from scipy.linalg import matrix_balance

    n = ss.order
    if n == 0:
        return ss
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = ss.A
    M[:n, n] = ss.B
    M[n, :n] = ss.C
    M[n, n] = ss.D
    _, (scale, _) = matrix_balance(M, permute=False, separate=True)
    t = scale[:n] / scale[n]
    return StateSpace(ss.A * (t[None, :] / t[:, None]), ss.B / t, ss.C * t, ss.D)
