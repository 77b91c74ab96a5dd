"""System descriptions (plant + linear controller + reset element) and the demo set."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

from .elements import ResetElement, base_tf, gfore
from .errors import ImproperTransferFunction, InputError
from .lti import RationalTF, tf_series

OMEGA_C = 200 * math.pi

# positioning-stage plant: 1.429e8 / (175.9 s^2 + 7738 s + 1.361e6)
PLANT = RationalTF((1.429e8,), (1.361e6, 7738.0, 175.9))

# (Kp, gamma, d, g) per controller
DEMO_TUNING = {
    "C1": (0.070, 0.0, 1.44, 1.98),
    "C2": (0.163, 0.2, 1.23, 2.12),
    "C3": (0.201, 0.4, 1.11, 2.27),
    "C4": (0.197, 0.6, 1.04, 2.43),
    "C5": (0.183, 0.8, 1.01, 2.63),
}


@dataclass(frozen=True)
class SystemDescription:
    """Loop ``e -> C_R -> C_L -> G -> y`` with unity negative feedback."""

    plant: RationalTF
    linear_controller: RationalTF
    reset_element: ResetElement
    label: str = ""
    disturbance_input: Optional[tuple[float, ...]] = field(default=None)

    def __post_init__(self):
        if not self.plant.is_strictly_proper:
            raise ImproperTransferFunction("plant must be strictly proper")
        if not self.linear_controller.is_proper:
            raise ImproperTransferFunction("linear controller must be proper")

    @property
    def loop(self) -> RationalTF:
        """Linear part ``C_L * G`` seen by the reset element."""
        return tf_series(self.linear_controller, self.plant)

    @property
    def reset_tf(self) -> RationalTF:
        return base_tf(self.reset_element)

    @property
    def open_loop(self) -> RationalTF:
        """Base linear open loop ``C_L * G * C_R``."""
        return tf_series(self.loop, self.reset_tf)

    def with_gamma(self, gamma: float) -> "SystemDescription":
        return SystemDescription(self.plant, self.linear_controller,
                                 self.reset_element.with_gamma(gamma), self.label,
                                 self.disturbance_input)

    def to_dict(self) -> dict:
        out = {
            "label": self.label,
            "plant": self.plant.to_dict(),
            "linear_controller": self.linear_controller.to_dict(),
            "reset": self.reset_element.to_dict(),
        }
        if self.disturbance_input is not None:
            out["disturbance_input"] = list(self.disturbance_input)
        return out

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, data: dict) -> "SystemDescription":
        if not isinstance(data, dict):
            raise InputError("system description must be a JSON object")
        tfs = {}
        for key in ("plant", "linear_controller"):
            tfs[key] = _parse_tf(data, key)
        if "reset" not in data:
            raise InputError("missing field 'reset'")
        reset = data["reset"]
        try:
            elem = ResetElement.from_dict(reset)
        except KeyError as exc:
            raise InputError(f"missing field 'reset.{exc.args[0]}'") from None
        except (TypeError, ValueError) as exc:
            raise InputError(f"invalid field 'reset': {exc}") from None
        dist = data.get("disturbance_input")
        if dist is not None:
            try:
                dist = tuple(float(v) for v in dist)
            except (TypeError, ValueError):
                raise InputError("invalid field 'disturbance_input'") from None
        label = data.get("label", "")
        if not isinstance(label, str):
            raise InputError("invalid field 'label': expected a string")
        try:
            return cls(tfs["plant"], tfs["linear_controller"], elem, label, dist)
        except ImproperTransferFunction as exc:
            raise InputError(f"invalid field 'plant' or 'linear_controller': {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "SystemDescription":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"malformed JSON: {exc}") from None
        return cls.from_dict(data)


def _parse_tf(data: dict, key: str) -> RationalTF:
    if key not in data:
        raise InputError(f"missing field '{key}'")
    entry = data[key]
    if not isinstance(entry, dict):
        raise InputError(f"invalid field '{key}': expected an object with num/den")
    for part in ("num", "den"):
        if part not in entry:
            raise InputError(f"missing field '{key}.{part}'")
        if not isinstance(entry[part], list) or not entry[part]:
            raise InputError(f"invalid field '{key}.{part}': expected a non-empty list")
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in entry[part]):
            raise InputError(f"invalid field '{key}.{part}': coefficients must be numbers")
    try:
        return RationalTF(tuple(entry["num"]), tuple(entry["den"]))
    except ValueError as exc:
        raise InputError(f"invalid field '{key}': {exc}") from None


def _first_order(num1: float, den1: float) -> RationalTF:
    """``(num1*s + 1) / (den1*s + 1)``."""
    return RationalTF((1.0, num1), (1.0, den1))


def demo_controller(kp: float, d: float, g: float, omega_c: float = OMEGA_C) -> RationalTF:
    """Linear part of the CgLp + PID controller (everything except the GFORE)."""
    wc = omega_c
    lead1 = _first_order(1 / wc, 1 / (10 * wc))
    pi = RationalTF((wc, 10.0), (0.0, 10.0))
    lead2 = _first_order(g / wc, 1 / (g * wc))
    lowpass = RationalTF((1.0,), (1.0, 1 / (10 * wc)))
    out = RationalTF.gain(kp)
    for part in (lead1, pi, lead2, lowpass):
        out = tf_series(out, part)
    return out


def demo_system(name: str) -> SystemDescription:
    """One of the five positioning-stage controllers ``C1`` .. ``C5``."""
    key = name.upper()
    if key.startswith("L"):
        key = "C" + key[1:]
    if key not in DEMO_TUNING:
        raise InputError(f"unknown demo system {name!r}; expected one of {sorted(DEMO_TUNING)}")
    kp, gamma, d, g = DEMO_TUNING[key]
    return SystemDescription(
        plant=PLANT,
        linear_controller=demo_controller(kp, d, g),
        reset_element=gfore(OMEGA_C / d, gamma),
        label=key,
    )


def demo_set() -> dict[str, SystemDescription]:
    return {name: demo_system(name) for name in DEMO_TUNING}
