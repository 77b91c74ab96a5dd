"""First-order reset elements (GFORE and PCI)."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .lti import RationalTF


class ResetKind(str, Enum):
    GFORE = "gfore"
    PCI = "pci"


@dataclass(frozen=True)
class ResetMatrices:
    A_r: float
    B_r: float
    C_r: float
    D_r: float


@dataclass(frozen=True)
class ResetElement:
    """A first-order reset element.

    ``gamma`` multiplies the reset state at every zero crossing of the error.
    ``gamma == 1`` (no reset at all) is accepted for simulation only.
    """

    kind: ResetKind
    omega_r: float
    gamma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ResetKind(self.kind))
        if not self.omega_r > 0:
            raise ValueError("omega_r must be positive")
        if not -1.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (-1, 1], 1 meaning no reset")

    @property
    def is_linear(self) -> bool:
        return self.gamma == 1.0

    def with_gamma(self, gamma: float) -> "ResetElement":
        return ResetElement(self.kind, self.omega_r, gamma)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "omega_r": self.omega_r, "gamma": self.gamma}

    @classmethod
    def from_dict(cls, data: dict) -> "ResetElement":
        return cls(ResetKind(str(data["kind"]).lower()), float(data["omega_r"]),
                   float(data.get("gamma", 0.0)))


def gfore(omega_r: float, gamma: float = 0.0) -> ResetElement:
    return ResetElement(ResetKind.GFORE, omega_r, gamma)


def pci(omega_r: float, gamma: float = 0.0) -> ResetElement:
    return ResetElement(ResetKind.PCI, omega_r, gamma)


def base_tf(elem: ResetElement) -> RationalTF:
    """Transfer function of the element with the reset rule removed."""
    w = elem.omega_r
    if elem.kind is ResetKind.GFORE:
        # 1 / (s/w + 1) == w / (s + w)
        return RationalTF((w,), (w, 1.0))
    return RationalTF((w, 1.0), (0.0, 1.0))


def matrices(elem: ResetElement) -> ResetMatrices:
    w = elem.omega_r
    if elem.kind is ResetKind.GFORE:
        return ResetMatrices(A_r=-w, B_r=1.0, C_r=w, D_r=0.0)
    return ResetMatrices(A_r=0.0, B_r=1.0, C_r=w, D_r=1.0)
