"""Measured-constant records shared by the auditing and verification code."""
from __future__ import annotations

from dataclasses import dataclass, field
import math


@dataclass
class VerificationReport:
    """One measured property.

    ``constants`` holds the measured values, ``parameters`` what they were
    measured at. ``passed`` is decided by the producer.
    """

    property: str
    constants: dict = field(default_factory=dict)
    parameters: dict = field(default_factory=dict)
    passed: bool = True
    notes: str = ""

    def line(self) -> str:
        consts = ", ".join(f"{k}={_fmt(v)}" for k, v in self.constants.items())
        status = "PASS" if self.passed else "FAIL"
        tail = f"  # {self.notes}" if self.notes else ""
        return f"{status} {self.property}: {consts}{tail}"

    def to_dict(self) -> dict:
        return {
            "property": self.property,
            "constants": {k: _jsonable(v) for k, v in self.constants.items()},
            "parameters": {k: _jsonable(v) for k, v in self.parameters.items()},
            "passed": bool(self.passed),
            "notes": self.notes,
        }


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if hasattr(v, "tolist"):
        return v.tolist()
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v
