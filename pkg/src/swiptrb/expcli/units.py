"""Unit conversion at the spec-file boundary. Everything inside is linear SI."""

from __future__ import annotations

import math
import re

UNITS = ("dBm", "dB", "W", "mW", "uW", "linear")

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z]*)\s*$")


class UnitError(ValueError):
    pass


def unit_convert(value: float, unit: str) -> float:
    """Convert ``value`` given in ``unit`` to linear SI (watts or a plain ratio)."""
    if unit == "dBm":
        return 10.0 ** ((value - 30.0) / 10.0)
    if unit == "dB":
        return 10.0 ** (value / 10.0)
    if unit in ("W", "linear", ""):
        return float(value)
    if unit == "mW":
        return value * 1e-3
    if unit == "uW":
        return value * 1e-6
    raise UnitError(f"unknown unit {unit!r}; expected one of {', '.join(UNITS)}")


def to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


def to_db(ratio: float) -> float:
    return 10.0 * math.log10(ratio)


def parse_quantity(raw) -> float:
    """Number (taken as linear) or a string such as ``"30 dBm"`` or ``"-40 dB"``."""
    if isinstance(raw, bool):
        raise UnitError(f"expected a number, got {raw!r}")
    if isinstance(raw, (int, float)):
        return float(raw)
    if isinstance(raw, str):
        m = _QUANTITY.match(raw)
        if not m:
            raise UnitError(f"cannot parse quantity {raw!r}")
        return unit_convert(float(m.group(1)), m.group(2))
    raise UnitError(f"expected a number or quantity string, got {raw!r}")
