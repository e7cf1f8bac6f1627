"""Structured pass/fail records shared by all verification checks."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


def _plain(value):
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, complex):
        return {"re": _plain(value.real), "im": _plain(value.imag)}
    return value


@dataclass
class VerificationReport:
    """Outcome of one named check.

    ``anchor`` is a short statement of the mathematical fact being checked,
    kept with the numbers for traceability.
    """

    name: str
    params: dict = field(default_factory=dict)
    computed: dict = field(default_factory=dict)
    reference: dict = field(default_factory=dict)
    tolerance: float | None = None
    passed: bool = False
    anchor: str = ""
    flags: list = field(default_factory=list)

    def to_dict(self):
        return {
            "name": self.name,
            "params": _plain(self.params),
            "computed": _plain(self.computed),
            "reference": _plain(self.reference),
            "tolerance": _plain(self.tolerance),
            "pass": bool(self.passed),
            "anchor": self.anchor,
            "flags": list(self.flags),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data):
        return cls(
            name=data["name"],
            params=data.get("params", {}),
            computed=data.get("computed", {}),
            reference=data.get("reference", {}),
            tolerance=data.get("tolerance"),
            passed=data["pass"],
            anchor=data.get("anchor", ""),
            flags=data.get("flags", []),
        )


def close_report(name, computed, reference, tol, *, params=None, anchor="", relative=False):
    """Report comparing a single computed scalar against a reference value."""
    err = abs(computed - reference)
    if relative:
        err = err / abs(reference)
    return VerificationReport(
        name=name,
        params=params or {},
        computed={"value": computed, "error": err},
        reference={"value": reference},
        tolerance=tol,
        passed=bool(err <= tol),
        anchor=anchor,
    )
