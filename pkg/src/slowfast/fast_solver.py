"""Time integration of the stiff three-component system.

The state is advanced in the variables ``(u_b, u, v)`` with ``u = u_a + u_b``:
the ``1/eps`` switching term cancels in the ``u`` equation, so stiffness is
confined to a scalar backward Euler solve for ``u_b`` in every cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .energy import energy_Ep, fast_dissipation
from .grid import Grid, ImplicitDiffusion, lp_norm
from .manifold import manifold_ub
from .model import ModelParams, eval_Q, eval_reactions
from .states import FastState, MonitorLog

BOUND_SLACK = 1.05


class SolverError(RuntimeError):
    """A time step could not be completed."""


class PositivityError(SolverError):
    def __init__(self, msg: str = "positivity failure, reduce dt"):
        super().__init__(msg)


@dataclass
class SolverConfig:
    dt: float
    t_end: float
    cfl_safety: float = 1.0
    monitor_every: int = 10
    positivity_retry_limit: int = 4
    energy_p: Sequence[float] = (2.0,)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.t_end > 0:
            raise ValueError("t_end must be > 0")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.monitor_every < 1:
            raise ValueError("monitor_every must be >= 1")
        if self.positivity_retry_limit < 0:
            raise ValueError("positivity_retry_limit must be >= 0")


def step_schedule(t_end: float, dt_max: float) -> tuple[int, float]:
    """Number of equal steps, and their size, covering ``[0, t_end]``."""
    n = max(1, math.ceil(t_end / dt_max - 1e-9))
    return n, t_end / n


@lru_cache(maxsize=64)
def _diffusion(n: int, h: float, d: float, dt: float) -> ImplicitDiffusion:
    return ImplicitDiffusion(n, h, d, dt)


def diffuse(values: np.ndarray, grid: Grid, d: float, dt: float) -> np.ndarray:
    return _diffusion(grid.n, grid.h, d, dt)(values)


def react(u_a, u_b, v, dt, eps, params: ModelParams, pk=None):
    """One reaction substep; returns new ``(u_a, u_b, v)``.

    ``u`` and ``v`` use the explicit midpoint rule on ``(f_u, f_v)``; ``u_b``
    is advanced by backward Euler on ``f_b - Q/eps`` with ``u, v`` taken at
    the stage being solved for.  With ``eps == 0`` the ``u_b`` solves become
    projections onto the slow manifold.  Raises :class:`PositivityError` when
    a stage leaves the nonnegative cone.
    """
    if pk is None:
        pk = kernels.pack(params)
    solve = kernels.stiff_ub_solve if eps > 0 else _project
    u = u_a + u_b
    _, _, fv, fu = eval_reactions(u_a, u_b, v, params)
    u_mid = u + 0.5 * dt * fu
    v_mid = v + 0.5 * dt * fv
    if np.any(u_mid < 0) or np.any(v_mid < 0):
        raise PositivityError()
    ub_mid, bad = solve(u_mid, v_mid, u_b, 0.5 * dt, eps, pk)
    _raise_on(bad)
    _, _, fv, fu = eval_reactions(u_mid - ub_mid, ub_mid, v_mid, params)
    u_new = u + dt * fu
    v_new = v + dt * fv
    if np.any(u_new < 0) or np.any(v_new < 0):
        raise PositivityError()
    ub_new, bad = solve(u_new, v_new, u_b, dt, eps, pk)
    _raise_on(bad)
    return u_new - ub_new, ub_new, v_new


def _project(u, v, ub0, dt, eps, pk):
    ub, _ = kernels.manifold_roots(u, v, pk, 1e-14, ub0)
    return ub, np.zeros(len(u), dtype=np.int8)


def _raise_on(bad: np.ndarray) -> None:
    if np.any(bad == 2):
        raise SolverError("internal error: bracketed Newton iteration did not converge")
    if np.any(bad == 1):
        raise PositivityError()


def split_step(u_a, u_b, v, grid: Grid, dt: float, eps: float, params: ModelParams, pk):
    """Strang step (half diffusion, reaction, half diffusion) on raw arrays."""
    half = 0.5 * dt
    ua = diffuse(u_a, grid, params.d_a, half)
    ub = diffuse(u_b, grid, params.d_b, half)
    v = diffuse(v, grid, params.d_v, half)
    ua, ub, v = react(ua, ub, v, dt, eps, params, pk)
    ua = diffuse(ua, grid, params.d_a, half)
    ub = diffuse(ub, grid, params.d_b, half)
    v = diffuse(v, grid, params.d_v, half)
    return _nonneg(ua), _nonneg(ub), _nonneg(v)


def _step_once(s: FastState, dt: float, params: ModelParams, pk) -> FastState:
    ua, ub, v = split_step(s.u_a, s.u_b, s.v, s.grid, dt, s.eps, params, pk)
    return FastState(s.grid, ua, ub, v, s.eps, s.t + dt)


def _nonneg(a: np.ndarray) -> np.ndarray:
    # the tridiagonal solves are M-matrix inverses; only round-off is clipped
    if np.any(a < -1e-13 * (1.0 + np.max(np.abs(a)))):
        raise PositivityError()
    return np.maximum(a, 0.0)


def step_fast(s: FastState, dt: float, params: ModelParams,
              retry_limit: int = 4, pk=None) -> FastState:
    """Advance by ``dt`` with Strang splitting (diffusion / reaction / diffusion).

    On a positivity failure the interval is retried as two half steps,
    recursively, at most ``retry_limit`` levels deep.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if pk is None:
        pk = kernels.pack(params)
    try:
        return _step_once(s, dt, params, pk)
    except PositivityError:
        if retry_limit <= 0:
            raise
    mid = step_fast(s, 0.5 * dt, params, retry_limit - 1, pk)
    return step_fast(mid, 0.5 * dt, params, retry_limit - 1, pk)


def effective_dt(cfg: SolverConfig, grid: Grid) -> float:
    return min(cfg.dt, cfg.cfl_safety * grid.h)


def bounds(init_mass: float, init_vmax: float, grid: Grid, params: ModelParams):
    """The time-uniform bounds ``(K_1, K_inf)`` on mass and on ``max v``."""
    if params.eta_bar == 0:
        k1 = init_mass  # no growth: mass can only decrease
    elif params.eta_low == 0:
        k1 = math.inf
    else:
        k1 = max(init_mass, 2.0 * grid.L * params.eta_bar / params.eta_low)
    k_inf = max(init_vmax, params.eta_v / params.r_v if params.r_v > 0 else math.inf)
    return k1, k_inf


FAST_COLUMNS = ["t", "mass", "v_inf", "Q_L2", "manifold_dist", "fast_dissipation",
                "mass_violation", "v_violation"]


def integrate_fast(init: FastState, cfg: SolverConfig, params: ModelParams,
                   monitors: bool = True, dt: float | None = None,
                   observer: Callable[[FastState, int], None] | None = None,
                   snapshot_times: Sequence[float] = ()) -> tuple[FastState, MonitorLog]:
    """Integrate to ``cfg.t_end`` and log diagnostics every ``monitor_every`` steps.

    ``dt`` overrides the configured step (it is still shrunk to divide
    ``t_end`` evenly).  ``observer(state, step)`` is called at each monitor
    step, including step 0 and the last step.
    """
    init.check()
    grid = init.grid
    n_steps, dt = step_schedule(cfg.t_end, dt if dt is not None else effective_dt(cfg, grid))
    pk = kernels.pack(params)
    cols = FAST_COLUMNS + [f"E_{p:g}" for p in cfg.energy_p] if monitors else ["t"]
    log = MonitorLog(cols)
    k1, k_inf = bounds(lp_norm(init.u, grid.h, 1), float(np.max(init.v)), grid, params)
    pending = sorted(snapshot_times)

    def record(s: FastState, step: int):
        if monitors:
            row = _fast_row(s, params, cfg.energy_p, k1, k_inf)
            log.append(row)
            if row["mass_violation"]:
                log.flags.append(f"t={s.t:.6g}: mass {row['mass']:.6g} exceeds {k1:.6g}")
            if row["v_violation"]:
                log.flags.append(f"t={s.t:.6g}: max v {row['v_inf']:.6g} exceeds {k_inf:.6g}")
        else:
            log.append({"t": s.t})
        if observer is not None:
            observer(s, step)

    s = init.copy()
    record(s, 0)
    for step in range(1, n_steps + 1):
        s = step_fast(s, dt, params, cfg.positivity_retry_limit, pk)
        s.t = step * dt
        while pending and s.t >= pending[0] - 1e-12:
            log.snapshots.append(s.copy())
            pending.pop(0)
        if step % cfg.monitor_every == 0 or step == n_steps:
            record(s, step)
    return s, log


def _fast_row(s: FastState, params: ModelParams, energy_p, k1, k_inf) -> dict:
    h = s.grid.h
    u = s.u
    mass = lp_norm(u, h, 1)
    vmax = float(np.max(s.v))
    Q = eval_Q(s.u_a, s.u_b, s.v, params)[2]
    ubs = manifold_ub(u, s.v, params)
    row = {
        "t": s.t,
        "mass": mass,
        "v_inf": vmax,
        "Q_L2": lp_norm(Q, h),
        "manifold_dist": lp_norm(s.u_b - ubs, h),
        "fast_dissipation": fast_dissipation(s, s.eps, params),
        "mass_violation": float(mass > BOUND_SLACK * k1),
        "v_violation": float(vmax > BOUND_SLACK * k_inf),
    }
    for p in energy_p:
        row[f"E_{p:g}"] = energy_Ep(s, p, params)
    return row
