"""Check results, suite aggregation and the JSON report format.

JSON layout (field order is fixed)::

    {
      "checks": [
        {"name": ..., "reference": ..., "points_used": ..., "max_residual": ...,
         "tolerance": ..., "scale": ..., "verdict": ..., "expected": ...,
         "notes": [...], "details": {...}},
        ...
      ],
      "verdict": "pass" | "fail",
      "meta": {...}            # only when run metadata was attached
    }

Floats are written with 17 significant digits so that parsing the text gives
back the identical doubles.  Non-finite floats are written as the strings
``"inf"``, ``"-inf"`` and ``"nan"``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable

import numpy as np


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    SKIPPED = "skipped"
    INDETERMINATE = "indeterminate"


HOLDS = "holds"
VIOLATED = "violated"


@dataclass
class CheckReport:
    """Outcome of one named check.

    ``max_residual`` is relative: the absolute residual divided by ``scale``
    (one plus the largest input magnitude at the worst point).  A check whose
    ``expected`` outcome is ``"violated"`` passes when the identity does *not*
    hold within tolerance; this is how models record classification facts such
    as "this structure is not co-Kähler".
    """

    name: str
    reference: str
    points_used: int
    max_residual: float
    tolerance: float
    scale: float = 1.0
    verdict: Verdict = Verdict.PASS
    expected: str = HOLDS
    notes: list[str] = field(default_factory=list)
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.max_residual < self.tolerance

    @property
    def absolute_residual(self) -> float:
        return self.max_residual * self.scale

    @classmethod
    def judged(cls, name: str, reference: str, points_used: int, max_residual: float,
               tolerance: float, scale: float = 1.0, expected: str = HOLDS, **kw) -> "CheckReport":
        holds = max_residual < tolerance
        ok = holds if expected == HOLDS else not holds
        return cls(name, reference, points_used, float(max_residual), float(tolerance),
                   float(scale), Verdict.PASS if ok else Verdict.FAIL, expected, **kw)

    @classmethod
    def skipped(cls, name: str, reference: str, reason: str, tolerance: float = 0.0) -> "CheckReport":
        return cls(name, reference, 0, math.nan, tolerance, 1.0, Verdict.SKIPPED, notes=[reason])

    def expect(self, expected: str) -> "CheckReport":
        """Re-judge this report against a different expected outcome."""
        if self.verdict in (Verdict.SKIPPED, Verdict.INDETERMINATE):
            return self
        holds = self.holds
        ok = holds if expected == HOLDS else not holds
        self.expected = expected
        self.verdict = Verdict.PASS if ok else Verdict.FAIL
        return self

    def as_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "reference": self.reference,
            "points_used": self.points_used,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "scale": self.scale,
            "verdict": self.verdict.value,
            "expected": self.expected,
            "notes": list(self.notes),
            "details": self.details,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "CheckReport":
        return cls(
            name=d["name"],
            reference=d["reference"],
            points_used=int(d["points_used"]),
            max_residual=_restore_float(d["max_residual"]),
            tolerance=_restore_float(d["tolerance"]),
            scale=_restore_float(d["scale"]),
            verdict=Verdict(d["verdict"]),
            expected=d.get("expected", HOLDS),
            notes=list(d.get("notes", [])),
            details=_restore(d.get("details", {})),
        )


@dataclass
class SuiteReport:
    checks: list[CheckReport] = field(default_factory=list)
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def verdict(self) -> Verdict:
        return Verdict.FAIL if any(c.verdict == Verdict.FAIL for c in self.checks) else Verdict.PASS

    @property
    def passed(self) -> bool:
        return self.verdict == Verdict.PASS

    def count(self, verdict: Verdict) -> int:
        return sum(1 for c in self.checks if c.verdict == verdict)

    @property
    def skipped(self) -> int:
        return self.count(Verdict.SKIPPED)

    def __getitem__(self, name: str) -> CheckReport:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def names(self) -> list[str]:
        return [c.name for c in self.checks]


def aggregate(reports: Iterable[CheckReport], meta: dict[str, Any] | None = None) -> SuiteReport:
    """Collect reports into a suite ordered by check name (stable for equal names)."""
    checks = sorted(reports, key=lambda c: c.name)
    return SuiteReport(checks, dict(meta or {}))


# serialization ------------------------------------------------------------

def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    text = format(x, ".17g")
    if all(ch not in text for ch in ".en"):
        text += ".0"
    return text


def _dump(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, Enum):
        obj = obj.value
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_dump(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_dump(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _dump(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_json(suite: SuiteReport, indent: int = 2) -> str:
    doc: dict[str, Any] = {
        "checks": [c.as_dict() for c in suite.checks],
        "verdict": suite.verdict.value,
    }
    if suite.meta:
        doc["meta"] = suite.meta
    return _dump(doc, indent, 0) + "\n"


_SPECIAL = {"nan": math.nan, "inf": math.inf, "-inf": -math.inf}


def _restore_float(v) -> float:
    if isinstance(v, str):
        return _SPECIAL[v]
    return float(v)


def _restore(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _restore(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_restore(v) for v in obj]
    if isinstance(obj, str) and obj in _SPECIAL:
        return _SPECIAL[obj]
    return obj


def from_json(text: str) -> SuiteReport:
    doc = json.loads(text)
    return SuiteReport([CheckReport.from_dict(c) for c in doc["checks"]], _restore(doc.get("meta", {})))


# residual bookkeeping -----------------------------------------------------

def magnitude(*arrays) -> float:
    m = 0.0
    for a in arrays:
        a = np.asarray(a, dtype=float)
        if a.size:
            m = max(m, float(np.max(np.abs(a))))
    return m


class Residuals:
    """Tracks the worst relative residual over sample points."""

    def __init__(self):
        self.worst = 0.0
        self.scale = 1.0
        self.count = 0
        self.per_point: list[float] = []

    def add(self, residual, inputs: Iterable = ()) -> float:
        absolute = magnitude(residual) if not np.isscalar(residual) else abs(float(residual))
        scale = 1.0 + magnitude(*inputs)
        rel = absolute / scale
        self.per_point.append(rel)
        if self.count == 0 or rel > self.worst or math.isnan(rel):
            self.worst, self.scale = rel, scale
        self.count += 1
        return rel

    def report(self, name: str, reference: str, tolerance: float, expected: str = HOLDS,
               **kw) -> CheckReport:
        return CheckReport.judged(name, reference, self.count, self.worst, tolerance,
                                  self.scale, expected, **kw)
