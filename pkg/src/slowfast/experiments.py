"""Epsilon sweeps: fast-versus-limit errors, rate fits, layer and energy studies."""

from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields, replace
from typing import Sequence

import numpy as np

from .energy import energy_Ep
from .fast_solver import SolverConfig, integrate_fast
from .grid import h1_norm, lp_norm, seminorm
from .limit_solver import integrate_limit
from .manifold import manifold_ub
from .model import eval_Q, exponents
from .scenario import Scenario
from .states import FastState


@dataclass(frozen=True)
class ConvergenceRow:
    """Distances between a fast run at ``eps`` and the limit reference.

    ``err_u`` and ``err_v`` are ``sup_t ||.||_{L^2} + (int_0^T |.|_{H^1}^2 dt)^{1/2}``;
    ``err_ub`` is the ``L^2(0,T;H^1)`` distance of ``u_b`` to ``u_b*(u, v)``
    along the limit solution; ``Q_norm`` is ``||Q||_{L^2}`` over space-time.
    """

    eps: float
    err_u: float
    err_v: float
    err_ub: float
    Q_norm: float
    eps_init: float


ERROR_COLUMNS = ("err_u", "err_v", "err_ub", "Q_norm")


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int


def fit_rate(points: Sequence[tuple[float, float]]) -> RateFit:
    """Least-squares line through ``(log eps, log err)``.

    Points with a nonpositive (or non-finite) coordinate are dropped with a
    warning; fewer than three remaining points is an error.
    """
    good = []
    for e, err in points:
        if e > 0 and err > 0 and math.isfinite(e) and math.isfinite(err):
            good.append((e, err))
        else:
            warnings.warn(f"dropping point ({e!r}, {err!r}) from rate fit", RuntimeWarning,
                          stacklevel=2)
    if len(good) < 3:
        raise ValueError(f"rate fit needs >= 3 positive points, got {len(good)}")
    good.sort()
    x = np.log([g[0] for g in good])
    y = np.log([g[1] for g in good])
    A = np.column_stack([x, np.ones_like(x)])
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(icpt), r2, len(good))


def time_weights(t: np.ndarray) -> np.ndarray:
    """Cell widths around each record time; ``sum w f`` approximates ``int f dt``."""
    t = np.asarray(t, dtype=float)
    w = np.zeros_like(t)
    if len(t) > 1:
        dt = np.diff(t)
        w[:-1] += 0.5 * dt
        w[1:] += 0.5 * dt
    return w


# -- runs ----------------------------------------------------------------------

@dataclass
class Reference:
    """Limit solution sampled at the record times."""

    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    ub: np.ndarray


def _record_config(sc: Scenario, t_end: float | None = None) -> SolverConfig:
    return replace(sc.solver, monitor_every=int(sc.experiments["record_every"]),
                   t_end=sc.solver.t_end if t_end is None else t_end)


def limit_reference(sc: Scenario, scheme: str | None = None) -> Reference:
    """Run the limit solver once, same grid and ``dt`` as the fast runs."""
    scheme = scheme or sc.experiments["reference"]
    ts, us, vs = [], [], []

    def obs(s, _step):
        ts.append(s.t)
        us.append(s.u.copy())
        vs.append(s.v.copy())

    integrate_limit(sc.limit_state(), _record_config(sc), sc.params, monitors=False,
                    dt=sc.solver.dt, observer=obs, scheme=scheme)
    u = np.array(us)
    v = np.array(vs)
    ub = np.array([manifold_ub(a, b, sc.params) for a, b in zip(u, v)])
    return Reference(np.array(ts), u, v, ub)


def _compare(sc: Scenario, init: FastState, ref: Reference) -> ConvergenceRow:
    h = sc.grid.h
    p = sc.params
    n = len(ref.t)
    su, sv = np.zeros(n), np.zeros(n)
    gu, gv, yb, qq = np.zeros(n), np.zeros(n), np.zeros(n), np.zeros(n)
    ts = np.zeros(n)

    def obs(s, _step):
        k = obs.k
        ts[k] = s.t
        U = s.u - ref.u[k]
        V = s.v - ref.v[k]
        W = s.u_b - ref.ub[k]
        su[k] = lp_norm(U, h)
        sv[k] = lp_norm(V, h)
        gu[k] = seminorm(U, h) ** 2
        gv[k] = seminorm(V, h) ** 2
        yb[k] = h1_norm(W, h) ** 2
        qq[k] = lp_norm(eval_Q(s.u_a, s.u_b, s.v, p)[2], h) ** 2
        obs.k += 1

    obs.k = 0
    integrate_fast(init, _record_config(sc), p, monitors=False, dt=sc.solver.dt, observer=obs)
    if obs.k != n or not np.allclose(ts, ref.t, rtol=0, atol=1e-12):
        raise RuntimeError("fast and limit record times do not match")
    w = time_weights(ts)
    ub_star0 = manifold_ub(init.u, init.v, p)
    return ConvergenceRow(
        eps=init.eps,
        err_u=float(su.max() + math.sqrt(w @ gu)),
        err_v=float(sv.max() + math.sqrt(w @ gv)),
        err_ub=float(math.sqrt(w @ yb)),
        Q_norm=float(math.sqrt(w @ qq)),
        eps_init=h1_norm(init.u_b - ub_star0, h),
    )


class SweepError(RuntimeError):
    """A run inside a sweep failed; ``eps`` names the offending value."""

    def __init__(self, eps: float, cause: BaseException):
        super().__init__(f"run at eps={eps:g} failed: {cause}")
        self.eps = eps
        self.cause = cause


def _guarded(sc, init, ref):
    try:
        return _compare(sc, init, ref)
    except Exception as exc:  # noqa: BLE001 - rewrapped with eps
        raise SweepError(init.eps, exc) from exc


def _map(jobs: int, fn, args_list):
    if jobs <= 1 or len(args_list) <= 1:
        return [fn(*a) for a in args_list]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futs = [pool.submit(fn, *a) for a in args_list]
        return [f.result() for f in futs]


def _fits(rows: Sequence[ConvergenceRow]) -> dict[str, RateFit | None]:
    out: dict[str, RateFit | None] = {}
    for col in ERROR_COLUMNS:
        pts = [(r.eps, getattr(r, col)) for r in rows]
        if sum(1 for _, e in pts if e > 0) < 3:
            out[col] = None
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            out[col] = fit_rate(pts)
    return out


def run_convergence(sc: Scenario, eps_list: Sequence[float], prepared: bool,
                    jobs: int = 1, reference: Reference | None = None,
                    ) -> tuple[list[ConvergenceRow], dict[str, RateFit | None]]:
    """Fast runs for every ``eps`` against one limit reference.

    ``prepared=True`` puts ``u_b`` on the slow manifold at ``t = 0``;
    otherwise ``u_b = ub_fraction * u``.  Rows come back sorted by ``eps``
    (descending) and one :class:`RateFit` per error column, ``None`` when
    fewer than three positive values exist.

    Raises
    ------
    SweepError
        If any fast run fails.
    """
    eps_list = sorted({float(e) for e in eps_list}, reverse=True)
    if len(eps_list) < 3:
        raise ValueError("eps_list needs at least 3 distinct values")
    if math.log10(eps_list[0] / eps_list[-1]) < 1.5 - 1e-9:
        raise ValueError("eps_list must span at least 1.5 decades")
    ref = reference if reference is not None else limit_reference(sc)
    args = [(sc, sc.fast_state(e, prepared), ref) for e in eps_list]
    rows = _map(jobs, _guarded, args)
    return rows, _fits(rows)


def offset_states(sc: Scenario, eps: float, eps_init_list: Sequence[float]) -> list[FastState]:
    """Initial states whose ``u_b`` sits ``eps_init`` (in ``H^1``) off the manifold.

    The offset direction is the scenario's unprepared split minus the
    manifold split, normalised in ``H^1``.
    """
    ua0, ub0, v = sc.initial_split(prepared=False)
    u = ua0 + ub0
    ubs = manifold_ub(u, v, sc.params)
    direction = ub0 - ubs
    size = h1_norm(direction, sc.grid.h)
    if size == 0 and any(e > 0 for e in eps_init_list):
        raise ValueError("unprepared data coincide with the manifold; change initial.ub_fraction")
    out = []
    for e in eps_init_list:
        ub = ubs + (e / size) * direction if e > 0 else ubs.copy()
        if np.any(ub < 0) or np.any(ub > u):
            raise ValueError(f"eps_init={e:g} pushes u_b outside [0, u]")
        out.append(FastState(sc.grid, u - ub, ub, v, eps))
    return out


def run_initial_layer(sc: Scenario, eps: float, eps_init_list: Sequence[float],
                      jobs: int = 1, reference: Reference | None = None) -> list[ConvergenceRow]:
    """Rows at fixed ``eps`` for each prescribed initial distance ``eps_init``."""
    ref = reference if reference is not None else limit_reference(sc)
    states = offset_states(sc, eps, sorted(eps_init_list))
    return _map(jobs, _guarded, [(sc, s, ref) for s in states])


@dataclass(frozen=True)
class LayerDecay:
    """Exponential fit ``dist(t) ~ amplitude * exp(-t / tau)`` over ``[0, t_window]``."""

    eps: float
    eps_init: float
    tau: float
    amplitude: float
    r_squared: float
    n_points: int
    t_window: float

    @property
    def ratio(self) -> float:
        """``tau / (2 eps)``."""
        return self.tau / (2.0 * self.eps)


def layer_decay(sc: Scenario, eps: float | None = None, window: float | None = None,
                prepared: bool = False) -> tuple[LayerDecay, np.ndarray, np.ndarray]:
    """Fit the early-time decay of ``||u_b - u_b*(u, v)||_{L^2}`` of the fast solution.

    Returns the fit and the sampled ``(t, dist)`` series.  Only the first
    ``window * eps`` of time is simulated.
    """
    eps = float(sc.experiments["layer_eps"] if eps is None else eps)
    window = float(sc.experiments["layer_window"] if window is None else window)
    t_win = window * eps
    init = sc.fast_state(eps, prepared)
    ts, ds = [], []
    h = sc.grid.h

    def obs(s, _step):
        ts.append(s.t)
        ds.append(lp_norm(s.u_b - manifold_ub(s.u, s.v, sc.params), h))

    cfg = replace(sc.solver, monitor_every=1, t_end=t_win)
    integrate_fast(init, cfg, sc.params, monitors=False, dt=min(sc.solver.dt, t_win / 8), observer=obs)
    t = np.array(ts)
    d = np.array(ds)
    keep = d > 0
    if keep.sum() < 3:
        raise ValueError("manifold distance vanishes; nothing to fit")
    A = np.column_stack([t[keep], np.ones(keep.sum())])
    y = np.log(d[keep])
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ np.array([slope, icpt])
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss if ss > 0 else 1.0
    tau = -1.0 / slope if slope < 0 else math.inf
    fit = LayerDecay(eps, h1_norm(init.u_b - manifold_ub(init.u, init.v, sc.params), h),
                     float(tau), float(math.exp(icpt)), r2, int(keep.sum()), t_win)
    return fit, t, d


# -- energy uniformity -----------------------------------------------------------

@dataclass(frozen=True)
class EnergyRow:
    eps: float
    p: float
    E_sup: float
    ua_sup: float
    ub_sup: float


ENERGY_COLUMNS = ("E_sup", "ua_sup", "ub_sup")


@dataclass
class UniformityTable:
    rows: list[EnergyRow]
    ratios: dict[float, dict[str, float]]


def _ratio(vals: Sequence[float]) -> float:
    lo, hi = min(vals), max(vals)
    if hi == 0:
        return 1.0
    return hi / lo if lo > 0 else math.inf


def _energy_sups(sc: Scenario, eps: float, p_list: Sequence[float], prepared: bool):
    h = sc.grid.h
    tabs = [exponents(p, sc.params) for p in p_list]
    sups = np.zeros((len(p_list), 3))

    def obs(s: FastState, _step):
        for i, (p, ex) in enumerate(zip(p_list, tabs)):
            vals = (energy_Ep(s, p, sc.params), lp_norm(s.u_a, h, ex.q_p), lp_norm(s.u_b, h, ex.r_p))
            sups[i] = np.maximum(sups[i], vals)

    integrate_fast(sc.fast_state(eps, prepared), sc.solver, sc.params, monitors=False,
                   dt=sc.solver.dt, observer=obs)
    return [EnergyRow(eps, p, *map(float, sups[i])) for i, p in enumerate(p_list)]


def run_energy_uniformity(sc: Scenario, eps_list: Sequence[float], p_list: Sequence[float],
                          prepared: bool | None = None, jobs: int = 1) -> UniformityTable:
    """Sup-in-time energies and norms per ``(eps, p)`` and their spread across ``eps``.

    Raises
    ------
    ValueError
        If some ``p`` is outside the admissible range of :func:`exponents`.
    """
    for p in p_list:
        if not exponents(p, sc.params).admissible:
            raise ValueError(f"p={p:g} is not admissible for these parameters")
    eps_list = sorted({float(e) for e in eps_list}, reverse=True)
    groups = _map(jobs, _energy_sups, [(sc, e, tuple(p_list), prepared) for e in eps_list])
    rows = [r for g in groups for r in g]
    ratios = {p: {c: _ratio([getattr(r, c) for r in rows if r.p == p]) for c in ENERGY_COLUMNS}
              for p in p_list}
    return UniformityTable(rows, ratios)


# -- tables --------------------------------------------------------------------------

def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def rows_csv(rows: Sequence[ConvergenceRow]) -> str:
    return _csv([f.name for f in fields(ConvergenceRow)], [astuple(r) for r in rows])


def fits_csv(fits: dict[str, RateFit | None]) -> str:
    out = []
    for col, f in fits.items():
        out.append((col, f.slope, f.intercept, f.r_squared, f.n_points) if f else
                   (col, "", "", "", 0))
    return _csv(["column", "slope", "intercept", "r_squared", "n_points"], out)


def energy_csv(table: UniformityTable) -> str:
    return _csv([f.name for f in fields(EnergyRow)], [astuple(r) for r in table.rows])


def ratios_csv(table: UniformityTable) -> str:
    return _csv(["p", *ENERGY_COLUMNS],
                [(p, *(r[c] for c in ENERGY_COLUMNS)) for p, r in table.ratios.items()])
