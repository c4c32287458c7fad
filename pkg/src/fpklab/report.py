"""Verification records produced by every check."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

STATUSES = ("pass", "fail", "inapplicable", "exploratory")
RTOL = 1e-7
ATOL = 1e-12


@dataclass(frozen=True)
class Sample:
    param: object
    lhs: float
    rhs: float
    margin: float


def relative_margin(lhs: float, rhs: float) -> float:
    """Signed slack ``(rhs - lhs)`` relative to the larger side; 0 when both vanish."""
    scale = max(abs(lhs), abs(rhs))
    if scale == 0.0:
        return 0.0
    return (rhs - lhs) / scale


def holds(lhs: float, rhs: float, rtol: float = RTOL, atol: float = ATOL) -> bool:
    return bool(lhs <= rhs + rtol * abs(rhs) + atol)


@dataclass(frozen=True)
class BoundReport:
    """Outcome of one inequality check over a sample grid.

    For explicit inequalities ``status == "pass"`` exactly when
    ``lhs <= rhs * (1 + rtol) + atol`` at every sample; the tolerances used
    are recorded in ``constants``.
    """

    theorem_id: str
    inputs: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    samples: tuple = ()
    status: str = "pass"
    worst_margin: float | None = None
    notes: tuple = ()

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    @classmethod
    def from_comparisons(cls, theorem_id, params, lhs, rhs, *, rtol=RTOL, atol=ATOL,
                         inputs=None, constants=None, notes=(), exploratory=False):
        lhs = np.atleast_1d(np.asarray(lhs, dtype=float))
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        params = list(params)
        if not (len(params) == lhs.size == rhs.size):
            raise ValueError("params, lhs and rhs must have equal length")
        samples = tuple(
            Sample(_plain(p), float(a), float(b), relative_margin(float(a), float(b)))
            for p, a, b in zip(params, lhs, rhs)
        )
        ok = all(holds(s.lhs, s.rhs, rtol, atol) for s in samples)
        worst = min((s.margin for s in samples), default=None)
        consts = dict(constants or {})
        consts.setdefault("rtol", rtol)
        consts.setdefault("atol", atol)
        status = "exploratory" if exploratory else ("pass" if ok else "fail")
        return cls(theorem_id, dict(inputs or {}), consts, samples, status, worst, tuple(notes))

    @classmethod
    def inapplicable(cls, theorem_id, reason, inputs=None, diagnostics=None):
        consts = {"diagnostics": dict(diagnostics or {})}
        return cls(theorem_id, dict(inputs or {}), consts, (), "inapplicable", None, (reason,))

    def with_status(self, status: str, note: str | None = None) -> "BoundReport":
        notes = self.notes + ((note,) if note else ())
        return BoundReport(self.theorem_id, self.inputs, self.constants, self.samples,
                           status, self.worst_margin, notes)

    def to_dict(self) -> dict:
        return {
            "theorem_id": self.theorem_id,
            "inputs": _jsonable(self.inputs),
            "constants": _jsonable(self.constants),
            "samples": [
                {"param": _jsonable(s.param), "lhs": _num(s.lhs), "rhs": _num(s.rhs),
                 "margin": _num(s.margin)}
                for s in self.samples
            ],
            "status": self.status,
            "worst_margin": _num(self.worst_margin),
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _plain(p):
    if isinstance(p, np.ndarray):
        return p.tolist()
    if isinstance(p, (np.floating, np.integer)):
        return p.item()
    if isinstance(p, tuple):
        return [_plain(v) for v in p]
    return p


def _num(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)
