"""Energy functionals, fast dissipation and distance-to-manifold diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .grid import lp_norm, seminorm
from .manifold import manifold_ub
from .model import ModelParams, eval_Q, exponents
from .states import FastState, LimitState

QUAD_RTOL = 1e-10
_MAX_NODES = 1024


@lru_cache(maxsize=64)
def _jacobi_rule(n: int, expo: float):
    # nodes/weights for int_0^1 g(s) s^expo ds
    x, w = roots_jacobi(n, 0.0, expo)
    return (1.0 + x) / 2.0, w / 2.0 ** (expo + 1.0)


@lru_cache(maxsize=16)
def _legendre_rule(n: int):
    x, w = roots_legendre(n)
    return (1.0 + x) / 2.0, w / 2.0


def _weighted_integral(g, upper, expo, rtol=QUAD_RTOL):
    """``int_0^upper g(z) z^expo dz`` per cell, order doubled until converged."""
    upper = np.asarray(upper, dtype=float)
    scale = upper ** (expo + 1.0)
    prev = None
    n = 8
    while True:
        s, w = _jacobi_rule(n, float(expo))
        vals = g(upper[..., None] * s) @ w * scale
        if prev is not None:
            err = np.abs(vals - prev)
            if np.all(err <= rtol * np.maximum(np.abs(vals), 1e-300)) or n >= _MAX_NODES:
                return vals
        prev = vals
        n *= 2


def energy_density(u_a, u_b, v, p_val: float, params: ModelParams):
    """Total energy density ``h_p(u_a, u_b, v)``.

    Both partial densities ``int_0^u theta(z, v)**(alpha(p-1)) z**(p-1) dz``
    (and the ``omega``/``beta`` analogue) are computed with Gauss-Jacobi
    rules for the weight ``z**(p-1)``; the remaining factor is smooth
    because ``theta >= A_off > 0``.
    """
    if not p_val >= 1:
        raise ValueError(f"domain error: need p >= 1, got {p_val}")
    u_a, u_b, v = (np.asarray(x, dtype=float) for x in (u_a, u_b, v))
    if np.any(u_a < 0) or np.any(u_b < 0) or np.any(v < 0):
        raise ValueError("domain error: arguments must be nonnegative")
    pm = p_val - 1.0
    if pm == 0.0:
        out = u_a + u_b
        return float(out) if out.ndim == 0 else out
    P = params
    va = v[..., None]
    ea, eb = P.alpha * pm, P.beta * pm
    ha = _weighted_integral(lambda z: (P.A_off + P.a_f * z + P.c_f * va) ** ea, u_a, pm)
    hb = _weighted_integral(lambda z: (P.B_off + P.b_f * z + P.d_f * va) ** eb, u_b, pm)
    out = ha + hb
    return float(out) if out.ndim == 0 else out


def energy_Ep(state: FastState, p_val: float, params: ModelParams) -> float:
    """Midpoint-rule integral of ``h_p`` over the domain."""
    h = energy_density(state.u_a, state.u_b, state.v, p_val, params)
    return float(state.grid.h * np.sum(h))


def fast_dissipation(state: FastState, eps: float, params: ModelParams) -> float:
    """``-(1/eps) * int Lam Q^2``; nonpositive by construction."""
    if not eps > 0:
        raise ValueError("eps must be > 0")
    _, lam, Q, _, _ = eval_Q(state.u_a, state.u_b, state.v, params)
    return -float(state.grid.h * np.sum(lam * Q * Q)) / eps


def q_l2(state: FastState, params: ModelParams) -> float:
    Q = eval_Q(state.u_a, state.u_b, state.v, params)[2]
    return lp_norm(Q, state.grid.h, 2.0)


def manifold_distance(state: FastState, params: ModelParams, guess=None) -> float:
    """``|| u_b - u_b*(u_a + u_b, v) ||_{L^2}``."""
    ubs = manifold_ub(state.u, state.v, params, guess=guess)
    return lp_norm(state.u_b - ubs, state.grid.h, 2.0)


@dataclass(frozen=True)
class EnergyReport:
    p: float
    E_p: float
    I2_fast: float
    Q_L2: float
    manifold_dist: float
    ua_norm: float
    ub_norm: float


def energy_report(state: FastState, p_val: float, params: ModelParams) -> EnergyReport:
    """Energy diagnostics at one time.

    ``I2_fast`` is reported multiplied by ``eps``, i.e. ``-int Lam Q^2``.
    ``ua_norm`` and ``ub_norm`` are the ``L^q(p)`` and ``L^r(p)`` norms.
    """
    ex = exponents(p_val, params)
    h = state.grid.h
    return EnergyReport(
        p=p_val,
        E_p=energy_Ep(state, p_val, params),
        I2_fast=state.eps * fast_dissipation(state, state.eps, params),
        Q_L2=q_l2(state, params),
        manifold_dist=manifold_distance(state, params),
        ua_norm=lp_norm(state.u_a, h, ex.q_p),
        ub_norm=lp_norm(state.u_b, h, ex.r_p),
    )


# -- rate functional -------------------------------------------------------

def _Q_and_dv(ua, ub, v, P: ModelParams):
    """``Q`` and ``dQ/dv`` without domain checks; ``ua`` may dip below zero."""
    th = P.A_off + P.a_f * ua + P.c_f * v
    om = P.B_off + P.b_f * ub + P.d_f * v
    if np.any(th <= 0) or np.any(om <= 0):
        raise ValueError("rate functional undefined: transition argument leaves (0, inf)")
    psi, phi = th**P.alpha, om**P.beta
    dpsi = P.alpha * th ** (P.alpha - 1.0)
    dphi = P.beta * om ** (P.beta - 1.0)
    lam = psi + phi
    q = phi * ub - psi * ua
    dq3 = P.d_f * ub * dphi - P.c_f * ua * dpsi
    dlam3 = P.c_f * dpsi + P.d_f * dphi
    return q / lam, (dq3 * lam - q * dlam3) / (lam * lam)


def _legendre_integral(g, upper, rtol=QUAD_RTOL):
    upper = np.asarray(upper, dtype=float)
    prev = None
    n = 8
    while True:
        s, w = _legendre_rule(n)
        vals = g(upper[..., None] * s) @ w * upper
        if prev is not None:
            err = np.abs(vals - prev)
            if np.all(err <= rtol * np.maximum(np.abs(vals), 1e-300) + 1e-300) or n >= _MAX_NODES:
                return vals
        prev = vals
        n *= 2


def switching_potential(x, y, z, params: ModelParams, deriv_z: bool = False):
    """``P(x, y, z) = int_0^x Q(xi - y, y, z) dxi`` (or its ``z``-derivative)."""
    x, y, z = (np.asarray(a, dtype=float) for a in (x, y, z))
    k = 1 if deriv_z else 0
    yy, zz = y[..., None], z[..., None]
    return _legendre_integral(lambda xi: _Q_and_dv(xi - yy, yy, zz, params)[k], x)


def rate_functional(fast: FastState, limit: LimitState, eps: float,
                    gammas=(1.0, 100.0, 100.0), delta: float | None = None,
                    params: ModelParams | None = None, parts: bool = False):
    """Lyapunov-type functional comparing a fast state with a limit state.

    Returns the scalar ``L``; with ``parts=True`` returns a dict holding
    ``L``, ``E`` and each quadratic term.
    """
    if params is None:
        raise ValueError("params required")
    if fast.grid != limit.grid:
        raise ValueError("grid mismatch between fast and limit states")
    if not eps > 0 or min(gammas) <= 0:
        raise ValueError("eps and gammas must be > 0")
    if delta is None:
        delta = params.d_b - params.d_a
    if not delta > 0:
        raise ValueError("delta = d_b - d_a must be > 0")
    g1, g2, g3 = gammas
    h = fast.grid.h
    u, v = limit.u, limit.v
    w = manifold_ub(u, v, params)
    U = fast.u - u
    V = fast.v - v
    W = fast.u_b - w

    P_fast = switching_potential(fast.u, w, fast.v, params)
    P_lim = switching_potential(u, w, v, params)
    d1P = _Q_and_dv(u - w, w, v, params)[0]
    d3P = switching_potential(u, w, v, params, deriv_z=True)
    E = -h * float(np.sum(P_fast - P_lim - d1P * U - d3P * V))

    terms = {
        "U": 0.5 * g1 * lp_norm(U, h) ** 2,
        "V": 0.5 * g2 * lp_norm(V, h) ** 2,
        "W": 0.5 * eps * g3 * lp_norm(W, h) ** 2,
        "gradW": 0.5 * eps * delta * seminorm(W, h) ** 2,
        "E": E,
    }
    L = math.fsum(terms.values())
    if parts:
        return {"L": L, **terms}
    return L
