"""Machine-readable command reports (JSON) and CSV tables."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import __version__


@dataclass
class Check:
    name: str
    passed: bool
    measured: Any
    tolerance: float


@dataclass
class Report:
    command: str
    parameters: dict
    seed: int
    results: dict = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    version: str = __version__
    tol_override: float | None = None

    def _tol(self, tol: float) -> float:
        return tol if self.tol_override is None or tol == 0 else self.tol_override

    def check_close(self, name: str, measured: float, expected: float, tol: float) -> bool:
        tol = self._tol(tol)
        ok = bool(abs(measured - expected) <= tol)
        self.checks.append(Check(name, ok, measured, tol))
        return ok

    def check_at_most(self, name: str, measured: float, bound: float, tol: float) -> bool:
        tol = self._tol(tol)
        ok = bool(measured <= bound + tol)
        self.checks.append(Check(name, ok, measured, tol))
        return ok

    def check_at_least(self, name: str, measured: float, bound: float, tol: float) -> bool:
        tol = self._tol(tol)
        ok = bool(measured >= bound - tol)
        self.checks.append(Check(name, ok, measured, tol))
        return ok

    def check_true(self, name: str, condition: bool, measured: Any = None) -> bool:
        self.checks.append(Check(name, bool(condition), measured if measured is not None else bool(condition), 0.0))
        return bool(condition)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "version": self.version,
            "seed": self.seed,
            "parameters": self.parameters,
            "results": self.results,
            "checks": [
                {"name": c.name, "passed": c.passed, "measured": c.measured, "tolerance": c.tolerance}
                for c in self.checks
            ],
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(_plain(self.to_dict()), indent=2) + "\n"


def _plain(obj):
    """Convert numpy scalars/arrays and complex numbers into JSON-compatible values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"re": _plain(obj.real.tolist()), "im": _plain(obj.imag.tolist())}
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # normalize negative zero so output does not depend on rounding paths
        return 0.0 if x == 0 else x
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def write_csv(path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else _csv_value(v) for v in row])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def _csv_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v
