import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from slowfast.fast_solver import SolverConfig
from slowfast.grid import Grid, lp_norm
from slowfast.limit_solver import StabilityError, integrate_limit, stable_dt, step_limit
from slowfast.manifold import manifold_ub
from slowfast.model import baseline_params, eval_reactions
from slowfast.states import LimitState

OSC = dict(a_f=0.8, c_f=0.3, alpha=0.8, beta=1.5, d_b=1.2, gamma_b=0.3)
NO_REACTION = dict(eta_a=0.0, eta_b=0.0, eta_v1=0.0, eta_v2=0.0, gamma_a=0.0, gamma_b=0.0)


def limit_ode(P):
    def rhs(t, y):
        u, v = np.maximum(y, 0.0)
        w = float(np.ravel(manifold_ub(u, v, P))[0])
        _, _, fv, fu = eval_reactions(u - w, w, v, P)
        return [fu, fv]
    return rhs


@pytest.mark.parametrize("scheme,dt,tol", [("explicit", 1e-5, 1e-6), ("split", 1e-4, 1e-9)])
def test_homogeneous_matches_ode(scheme, dt, tol):
    P = baseline_params().replace(**OSC)
    ref = solve_ivp(limit_ode(P), (0, 0.1), (0.9, 0.4), method="DOP853", rtol=1e-12, atol=1e-14).y[:, -1]
    g = Grid(1.0, 4)
    init = LimitState(g, np.full(4, 0.9), np.full(4, 0.4))
    s, _ = integrate_limit(init, SolverConfig(dt=dt, t_end=0.1), P, monitors=False, scheme=scheme)
    assert abs(s.u[0] - ref[0]) <= tol * ref[0] and abs(s.v[0] - ref[1]) <= tol * ref[1]


def test_stability_error(base):
    g = Grid(1.0, 16)
    s = LimitState(g, np.ones(16), np.ones(16))
    bound = stable_dt(g, base)
    assert bound == pytest.approx(g.h**2 / (2 * 1.05))
    with pytest.raises(StabilityError, match="need dt <="):
        step_limit(s, 1.01 * bound, base)
    step_limit(s, bound, base)


def test_unknown_scheme(base):
    g = Grid(1.0, 8)
    with pytest.raises(ValueError, match="unknown scheme"):
        integrate_limit(LimitState(g, np.ones(8), np.ones(8)), SolverConfig(dt=1e-3, t_end=0.01), base,
                        scheme="rk4")


@pytest.mark.parametrize("scheme", ["explicit", "split"])
def test_equal_diffusion_is_linear(scheme):
    # [DERIVED] d_a = d_b = d, no reactions: the cosine mode scales by the scheme's amplification factor
    P = baseline_params().replace(d_b=1.0, **NO_REACTION)
    g = Grid(1.0, 16)
    mode = np.cos(np.pi * g.x)
    lam = -(2 / g.h**2) * (1 - math.cos(math.pi * g.h))
    dt, n = stable_dt(g, P), 40
    init = LimitState(g, 1 + 0.5 * mode, np.full(16, 0.3))
    s, _ = integrate_limit(init, SolverConfig(dt=dt, t_end=n * dt), P, monitors=False, scheme=scheme)
    amp = (1 + dt * lam) if scheme == "explicit" else 1 / (1 - 0.5 * dt * lam) ** 2
    assert np.allclose(s.u, 1 + 0.5 * amp**n * mode, rtol=0, atol=1e-12)


def test_l1_contraction_ordered(asym):
    P = asym.replace(**NO_REACTION)
    g = Grid(1.0, 32)
    x = g.x
    v = 0.4 + 0.2 * np.cos(np.pi * x)
    lo = LimitState(g, 0.5 + 0.3 * np.cos(np.pi * x), v)
    hi = LimitState(g, lo.u + 0.2 * (1 + np.sin(3 * x)), v)
    cfg = SolverConfig(dt=1.0, t_end=0.05)
    d0 = lp_norm(hi.u - lo.u, g.h, 1)
    out = []
    for s in (lo, hi):
        out.append(integrate_limit(s, cfg, P, monitors=False)[0].u)
    assert np.all(out[1] >= out[0])
    assert lp_norm(out[1] - out[0], g.h, 1) <= d0 * (1 + 1e-12)


def test_zero_state(base):
    g = Grid(1.0, 8)
    s, _ = integrate_limit(LimitState(g, np.zeros(8), np.zeros(8)), SolverConfig(dt=1e-3, t_end=0.02), base)
    assert not np.any(s.u) and not np.any(s.v)


def test_continuous_dependence(asym):
    g = Grid(1.0, 32)
    x = g.x
    base_s = LimitState(g, 0.8 + 0.3 * np.cos(np.pi * x), 0.5 - 0.2 * np.cos(np.pi * x))
    cfg = SolverConfig(dt=1e-3, t_end=0.05)
    ref = integrate_limit(base_s, cfg, asym, monitors=False, scheme="split")[0]
    diffs = []
    for d in (1e-3, 1e-4):
        pert = base_s.copy(u=base_s.u + d * np.cos(2 * np.pi * x))
        diffs.append(lp_norm(integrate_limit(pert, cfg, asym, monitors=False, scheme="split")[0].u - ref.u, g.h))
    assert 7 <= diffs[0] / diffs[1] <= 13


def test_split_and_explicit_agree_to_first_order(asym):
    g = Grid(1.0, 16)
    x = g.x
    init = LimitState(g, 0.8 + 0.3 * np.cos(np.pi * x), 0.5 - 0.2 * np.cos(np.pi * x))
    cfg = SolverConfig(dt=1.0, t_end=0.05)
    dt0 = stable_dt(g, asym)
    gaps = []
    for dt in (dt0, dt0 / 2):
        a = integrate_limit(init, cfg, asym, monitors=False, dt=dt, scheme="explicit")[0]
        b = integrate_limit(init, cfg, asym, monitors=False, dt=dt, scheme="split")[0]
        gaps.append(lp_norm(a.u - b.u, g.h))
    assert gaps[1] < 1e-3 and 1.6 <= gaps[0] / gaps[1] <= 2.4
