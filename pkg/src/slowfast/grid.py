"""Uniform cell-centred mesh on (0, L) with zero-flux boundaries."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded


@dataclass(frozen=True)
class Grid:
    L: float
    n: int

    def __post_init__(self):
        if not self.n >= 4:
            raise ValueError(f"grid needs at least 4 cells, got n={self.n}")
        if not (math.isfinite(self.L) and self.L > 0):
            raise ValueError(f"domain length must be > 0, got L={self.L}")

    @property
    def h(self) -> float:
        return self.L / self.n

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.h

    def field(self, values) -> "Field":
        return Field(self, values)


class Field:
    """Cell-centred samples of a grid function."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        values = np.array(values, dtype=float)
        if values.shape != (grid.n,):
            raise ValueError(f"field has shape {values.shape}, grid expects ({grid.n},)")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    def __repr__(self) -> str:
        return f"Field(n={self.grid.n}, L={self.grid.L})"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "value"])
        for xi, fi in zip(self.grid.x, self.values):
            w.writerow([repr(float(xi)), repr(float(fi))])
        return buf.getvalue()


def lap_neumann(f: np.ndarray, h: float) -> np.ndarray:
    """Three-point Laplacian with mirror ghost cells, on a raw array."""
    out = np.empty_like(f)
    out[1:-1] = f[:-2] - 2.0 * f[1:-1] + f[2:]
    out[0] = f[1] - f[0]
    out[-1] = f[-2] - f[-1]
    return out / (h * h)


def laplacian_neumann(f: Field) -> Field:
    """Zero-flux discrete Laplacian of a field.

    Ghost values ``f[-1] = f[0]`` and ``f[n] = f[n-1]`` make the stencil
    exactly conservative: the cell sum of the result vanishes.
    """
    return Field(f.grid, lap_neumann(f.values, f.grid.h))


def _values(f) -> tuple[np.ndarray, float]:
    return f.values, f.grid.h


def norm_Lp(f: Field, p: float = 2.0) -> float:
    """Discrete ``L^p`` norm ``(h * sum |f_i|^p)^(1/p)``; ``p = inf`` gives the max norm."""
    vals, h = _values(f)
    return lp_norm(vals, h, p)


def lp_norm(vals: np.ndarray, h: float, p: float = 2.0) -> float:
    if p == math.inf:
        return float(np.max(np.abs(vals)))
    if not p >= 1:
        raise ValueError(f"domain error: need p >= 1, got {p}")
    a = np.abs(vals)
    if p == 1:
        return float(h * np.sum(a))
    if p == 2:
        return float(math.sqrt(h * np.sum(a * a)))
    return float((h * np.sum(a**p)) ** (1.0 / p))


def h1_seminorm(f: Field) -> float:
    """Forward-difference ``H^1`` seminorm; no boundary term (zero flux)."""
    vals, h = _values(f)
    return seminorm(vals, h)


def seminorm(vals: np.ndarray, h: float) -> float:
    g = np.diff(vals) / h
    return float(math.sqrt(h * np.sum(g * g)))


def h1_norm(vals: np.ndarray, h: float) -> float:
    return math.hypot(lp_norm(vals, h, 2.0), seminorm(vals, h))


class ImplicitDiffusion:
    """Backward Euler solver for ``(I - dt*d*Lap_h) x = b`` with zero flux.

    The banded matrix is assembled once per ``(d, dt, n, h)``.
    """

    def __init__(self, n: int, h: float, d: float, dt: float):
        r = d * dt / (h * h)
        ab = np.zeros((3, n))
        ab[0, 1:] = -r
        ab[1, :] = 1.0 + 2.0 * r
        ab[1, 0] = ab[1, -1] = 1.0 + r
        ab[2, :-1] = -r
        self.ab = ab
        self.r = r

    def __call__(self, b: np.ndarray) -> np.ndarray:
        return solve_banded((1, 1), self.ab, b, check_finite=False)
