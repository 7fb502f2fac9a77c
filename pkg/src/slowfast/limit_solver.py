"""Time integration of the triangular cross-diffusion limit system."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from . import kernels
from .fast_solver import (
    BOUND_SLACK, PositivityError, SolverConfig, SolverError, bounds, diffuse, split_step,
    step_schedule,
)
from .grid import Grid, lap_neumann, lp_norm, seminorm
from .manifold import A_field
from .model import ModelParams, eval_reactions
from .states import LimitState, MonitorLog

MANIFOLD_TOL = 1e-12
SCHEMES = ("explicit", "split")


class StabilityError(SolverError):
    pass


def stable_dt(grid: Grid, params: ModelParams, cfl_safety: float = 1.0) -> float:
    """Largest explicit step for the ``u`` equation, ``cfl * h^2 / (2 max(d_a, d_b))``."""
    return cfl_safety * grid.h**2 / (2.0 * max(params.d_a, params.d_b))


def _ub_star(u, v, pk, guess=None):
    ub, _ = kernels.manifold_roots(u, v, pk, MANIFOLD_TOL, guess)
    return ub


def _step_once(s: LimitState, dt: float, params: ModelParams, pk, guess):
    g = s.grid
    ub = _ub_star(s.u, s.v, pk, guess)
    ua = s.u - ub
    _, _, fv, fu = eval_reactions(ua, ub, s.v, params)
    u_new = s.u + dt * (lap_neumann(A_field(s.u, ub, params), g.h) + fu)
    v_new = diffuse(s.v + dt * fv, g, params.d_v, dt)
    if np.any(u_new < 0) or np.any(v_new < 0):
        raise PositivityError()
    return LimitState(g, u_new, v_new, s.t + dt), ub


def step_limit(s: LimitState, dt: float, params: ModelParams,
               retry_limit: int = 4, pk=None, guess=None) -> LimitState:
    """Advance the limit system by ``dt``.

    The ``u`` update is explicit in flux form, ``u + dt*(Lap_h A(u, v) + f_u*)``,
    with ``A`` evaluated per cell and then differenced.  ``v`` takes a
    backward Euler diffusion step after an explicit reaction.  ``guess`` is a
    previous manifold solution used as a warm start.

    Raises
    ------
    StabilityError
        If ``dt`` exceeds the explicit diffusion bound.
    """
    st, _ = _advance(s, dt, params, retry_limit, pk, guess)
    return st


def _advance(s, dt, params, retry_limit, pk, guess):
    if not dt > 0:
        raise ValueError("dt must be > 0")
    bound = stable_dt(s.grid, params)
    if dt > bound * (1 + 1e-12):
        raise StabilityError(f"dt={dt:.6g} exceeds the explicit stability bound; need dt <= {bound:.6g}")
    if pk is None:
        pk = kernels.pack(params)
    try:
        return _step_once(s, dt, params, pk, guess)
    except PositivityError:
        if retry_limit <= 0:
            raise
    mid, ub = _advance(s, 0.5 * dt, params, retry_limit - 1, pk, guess)
    out, _ = _advance(mid, 0.5 * dt, params, retry_limit - 1, pk, ub)
    return out, ub


def _advance_split(ua, ub, v, grid, dt, params, retry_limit, pk):
    # the eps -> 0 limit of the fast Strang step; the split is carried between steps
    try:
        return split_step(ua, ub, v, grid, dt, 0.0, params, pk)
    except PositivityError:
        if retry_limit <= 0:
            raise
    mid = _advance_split(ua, ub, v, grid, 0.5 * dt, params, retry_limit - 1, pk)
    return _advance_split(*mid, grid, 0.5 * dt, params, retry_limit - 1, pk)


def limit_dt(cfg: SolverConfig, grid: Grid, params: ModelParams,
             scheme: str = "explicit") -> float:
    if scheme == "split":
        return min(cfg.dt, cfg.cfl_safety * grid.h)
    return min(cfg.dt, stable_dt(grid, params, cfg.cfl_safety))


LIMIT_COLUMNS = ["t", "mass", "v_inf", "grad_u_L2", "mass_violation", "v_violation"]


def integrate_limit(init: LimitState, cfg: SolverConfig, params: ModelParams,
                    monitors: bool = True, dt: float | None = None,
                    observer: Callable[[LimitState, int], None] | None = None,
                    snapshot_times: Sequence[float] = (),
                    scheme: str = "explicit") -> tuple[LimitState, MonitorLog]:
    """Integrate the limit system to ``cfg.t_end``; mirrors ``integrate_fast``.

    ``scheme="explicit"`` uses :func:`step_limit`.  ``scheme="split"`` runs the
    fast solver's Strang step with the stiff ``u_b`` solve replaced by a
    projection onto the slow manifold, i.e. the ``eps -> 0`` limit of the
    fast discretisation at the same ``dt``.  Comparing against it cancels the
    time discretisation error shared by both solvers.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    init.check()
    grid = init.grid
    n_steps, dt = step_schedule(cfg.t_end, dt if dt is not None else limit_dt(cfg, grid, params, scheme))
    pk = kernels.pack(params)
    log = MonitorLog(LIMIT_COLUMNS if monitors else ["t"])
    k1, k_inf = bounds(lp_norm(init.u, grid.h, 1), float(np.max(init.v)), grid, params)
    pending = sorted(snapshot_times)

    def record(s: LimitState, step: int):
        if monitors:
            mass = lp_norm(s.u, grid.h, 1)
            vmax = float(np.max(s.v))
            row = {
                "t": s.t, "mass": mass, "v_inf": vmax,
                "grad_u_L2": seminorm(s.u, grid.h),
                "mass_violation": float(mass > BOUND_SLACK * k1),
                "v_violation": float(vmax > BOUND_SLACK * k_inf),
            }
            log.append(row)
            if row["mass_violation"]:
                log.flags.append(f"t={s.t:.6g}: mass {mass:.6g} exceeds {k1:.6g}")
            if row["v_violation"]:
                log.flags.append(f"t={s.t:.6g}: max v {vmax:.6g} exceeds {k_inf:.6g}")
        else:
            log.append({"t": s.t})
        if observer is not None:
            observer(s, step)

    s = init.copy()
    guess = None
    if scheme == "split":
        ub = _ub_star(s.u, s.v, pk)
        carry = (s.u - ub, ub, s.v)
    record(s, 0)
    for step in range(1, n_steps + 1):
        if scheme == "split":
            carry = _advance_split(*carry, grid, dt, params, cfg.positivity_retry_limit, pk)
            s = LimitState(grid, carry[0] + carry[1], carry[2])
        else:
            s, guess = _advance(s, dt, params, cfg.positivity_retry_limit, pk, guess)
        s.t = step * dt
        while pending and s.t >= pending[0] - 1e-12:
            log.snapshots.append(s.copy())
            pending.pop(0)
        if step % cfg.monitor_every == 0 or step == n_steps:
            record(s, step)
    return s, log
