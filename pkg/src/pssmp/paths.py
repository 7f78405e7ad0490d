"""Path containers for the driving Lévy process and the pssMp it generates.

Both containers are immutable after construction and serialize to CSV
(header ``t,value``) and to JSON records, the on-disk formats used by the
experiment runner.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import DomainError


def _as_grid(times: Any, values: Any) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.ndim != 1 or v.ndim != 1 or t.shape != v.shape or t.size < 1:
        raise DomainError("times and values must be equal-length 1-d arrays")
    if t[0] != 0.0:
        raise DomainError("time grid must start at 0")
    if t.size > 1 and not np.all(np.diff(t) > 0):
        raise DomainError("time grid must be strictly increasing")
    return t, v


@dataclass(frozen=True)
class SamplePath:
    """A Lévy path on a grid: xi_0 = 0, right-continuous evaluation.

    Attributes
    ----------
    times, values : arrays of equal length, times strictly increasing from 0.
    seed : seed that generated the path (0 for analytic paths).
    step_policy : description of the grid generation, e.g. ``"uniform:dt=0.001"``.
    """

    times: np.ndarray
    values: np.ndarray
    seed: int = 0
    step_policy: str = "uniform"
    zero_start: bool = True  # relaxed for h-process paths started at x0 > 0

    def __post_init__(self):
        t, v = _as_grid(self.times, self.values)
        if self.zero_start and v[0] != 0.0:
            raise DomainError("a Levy path starts at xi_0 = 0")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        self.times.setflags(write=False)
        self.values.setflags(write=False)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def value_at(self, s: float) -> float:
        """Right-continuous evaluation at time ``s`` (last grid point <= s)."""
        if s < 0 or s > self.horizon:
            raise DomainError(f"time {s} outside [0, {self.horizon}]")
        idx = int(np.searchsorted(self.times, s, side="right")) - 1
        return float(self.values[idx])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,value\n")
        for t, v in zip(self.times, self.values):
            buf.write(f"{t!r},{v!r}\n".replace("'", ""))
        return buf.getvalue()

    def to_json(self) -> str:
        rec = {
            "seed": int(self.seed),
            "step_policy": self.step_policy,
            "times": self.times.tolist(),
            "values": self.values.tolist(),
        }
        return json.dumps(rec, sort_keys=True)


@dataclass(frozen=True)
class PssmpPath:
    """A positive self-similar path produced by the Lamperti transform.

    ``values[0] == start``; all values are nonnegative, and strictly
    positive whenever the driving process cannot hit 0 (start > 0 and
    mean >= 0).
    """

    times: np.ndarray
    values: np.ndarray
    start: float
    seed: int = 0
    model: Any = field(default=None, compare=False)

    def __post_init__(self):
        t, v = _as_grid(self.times, self.values)
        if not np.isclose(v[0], self.start, rtol=1e-12, atol=1e-300):
            raise DomainError("values[0] must equal start")
        if np.any(v < 0):
            raise DomainError("pssMp values must be nonnegative")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        self.times.setflags(write=False)
        self.values.setflags(write=False)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def value_at(self, s: float) -> float:
        if s < 0 or s > self.horizon:
            raise DomainError(f"time {s} outside [0, {self.horizon}]")
        idx = int(np.searchsorted(self.times, s, side="right")) - 1
        return float(self.values[idx])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,value\n")
        for t, v in zip(self.times, self.values):
            buf.write(f"{t!r},{v!r}\n".replace("'", ""))
        return buf.getvalue()

    def to_json(self) -> str:
        rec = {
            "seed": int(self.seed),
            "start": float(self.start),
            "times": self.times.tolist(),
            "values": self.values.tolist(),
        }
        return json.dumps(rec, sort_keys=True)
