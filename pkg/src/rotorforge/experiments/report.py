"""Experiment reports: results, named pass/fail checks and CSV tables."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence


@dataclass
class Check:
    name: str
    passed: bool
    value: Any = None
    target: Any = None
    detail: str = ""

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "value": _plain(self.value),
                "target": _plain(self.target), "detail": self.detail}


@dataclass
class Table:
    header: List[str]
    rows: List[Sequence[Any]]

    def to_csv(self) -> str:
        lines = [",".join(self.header)]
        for row in self.rows:
            lines.append(",".join(_cell(v) for v in row))
        return "\n".join(lines) + "\n"


@dataclass
class Report:
    """Outcome of one experiment.

    ``passed`` is true when every check passed; a report without checks passes.
    """

    kind: str
    params: Dict[str, Any] = field(default_factory=dict)
    results: Dict[str, Any] = field(default_factory=dict)
    checks: List[Check] = field(default_factory=list)
    tables: Dict[str, Table] = field(default_factory=dict)
    meta: Dict[str, Any] = field(default_factory=dict)

    def check(self, name: str, passed: bool, value=None, target=None, detail: str = ""):
        self.checks.append(Check(name, bool(passed), value, target, detail))
        return bool(passed)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {"kind": self.kind, "passed": self.passed, "params": _plain(self.params),
                "results": _plain(self.results),
                "checks": [c.as_dict() for c in self.checks],
                "tables": sorted(self.tables), "meta": _plain(self.meta)}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)

    def summary(self) -> str:
        lines = [f"{self.kind}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            lines.append(f"  [{'ok' if c.passed else 'FAIL'}] {c.name}: {_short(c.value)}"
                         + (f" (target {_short(c.target)})" if c.target is not None else ""))
        return "\n".join(lines)


def _cell(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _short(v) -> str:
    if isinstance(v, float):
        return format(v, ".4g")
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    return str(v)


def _plain(v):
    """JSON-friendly copy (numpy scalars and arrays, tuples, fractions)."""
    try:
        import numpy as np
    except ImportError:  # pragma: no cover
        np = None
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if np is not None:
        if isinstance(v, np.ndarray):
            return _plain(v.tolist())
        if isinstance(v, np.generic):
            return _plain(v.item())
    if isinstance(v, float):
        if math.isnan(v) or math.isinf(v):
            return str(v)
        return v
    if isinstance(v, (int, str, bool)) or v is None:
        return v
    if hasattr(v, "as_dict"):
        return _plain(v.as_dict())
    return str(v)


__all__ = ["Check", "Table", "Report"]
