"""State containers and the diagnostic log shared by both solvers."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import Field, Grid


def _arr(x, n):
    a = np.array(x, dtype=float)
    if a.shape != (n,):
        raise ValueError(f"expected {n} cell values, got shape {a.shape}")
    return a


@dataclass
class FastState:
    """Snapshot ``(u_a, u_b, v)`` of the stiff system at time ``t``."""

    grid: Grid
    u_a: np.ndarray
    u_b: np.ndarray
    v: np.ndarray
    eps: float
    t: float = 0.0

    def __post_init__(self):
        n = self.grid.n
        self.u_a = _arr(self.u_a, n)
        self.u_b = _arr(self.u_b, n)
        self.v = _arr(self.v, n)
        if not self.eps > 0:
            raise ValueError("eps must be > 0")

    @property
    def u(self) -> np.ndarray:
        return self.u_a + self.u_b

    def check(self) -> None:
        for name in ("u_a", "u_b", "v"):
            a = getattr(self, name)
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} has non-finite values")
            if np.any(a < 0):
                raise ValueError(f"{name} has negative values")

    def fields(self) -> dict[str, Field]:
        return {k: Field(self.grid, getattr(self, k)) for k in ("u_a", "u_b", "v")}

    def copy(self, **changes) -> "FastState":
        base = dict(u_a=self.u_a.copy(), u_b=self.u_b.copy(), v=self.v.copy())
        base.update(changes)
        return replace(self, **base)

    def snapshot_csv(self) -> str:
        return _table_csv(["x", "u_a", "u_b", "v"],
                          [self.grid.x, self.u_a, self.u_b, self.v])


@dataclass
class LimitState:
    """Snapshot ``(u, v)`` of the cross-diffusion system at time ``t``."""

    grid: Grid
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        n = self.grid.n
        self.u = _arr(self.u, n)
        self.v = _arr(self.v, n)

    def check(self) -> None:
        for name in ("u", "v"):
            a = getattr(self, name)
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} has non-finite values")
            if np.any(a < 0):
                raise ValueError(f"{name} has negative values")

    def copy(self, **changes) -> "LimitState":
        base = dict(u=self.u.copy(), v=self.v.copy())
        base.update(changes)
        return replace(self, **base)

    def snapshot_csv(self) -> str:
        return _table_csv(["x", "u", "v"], [self.grid.x, self.u, self.v])


def _table_csv(header, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in zip(*columns):
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


@dataclass
class MonitorLog:
    """Time series of scalar diagnostics; one row per monitor step."""

    columns: list[str]
    rows: list[list[float]] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)
    snapshots: list = field(default_factory=list)

    def append(self, row: dict[str, float]) -> None:
        self.rows.append([float(row[c]) for c in self.columns])

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def __len__(self) -> int:
        return len(self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([repr(x) for x in r])
        return buf.getvalue()
