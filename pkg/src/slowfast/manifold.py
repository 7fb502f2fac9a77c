"""The slow manifold ``Q = 0``, parametrised by total density and ``v``.

For given ``(u, v)`` the split ``u = u_a* + u_b*`` with ``Q(u_a*, u_b*, v) = 0``
is unique: ``q(u - y, y, v)`` increases in ``y`` with slope at least
``A_off**alpha + B_off**beta`` and changes sign on ``[0, u]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import ModelParams, eval_Q, grad_q

DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class ManifoldPoint:
    u_tilde: float
    v_tilde: float
    u_a_star: float
    u_b_star: float
    residual: float
    iterations: int = 0


@dataclass(frozen=True)
class ManifoldJacobian:
    du_ub: float
    dv_ub: float
    du_ua: float
    dv_ua: float
    dA_du: float
    dA_dv: float


def _check(u, v):
    if not (u >= 0 and v >= 0):
        raise ValueError("domain error: arguments must be nonnegative")


def residual_scale(u_tilde, v_tilde, p: ModelParams):
    """``Lam(u, 0, v) * max(u, 1)``, the scale of the root tolerance."""
    _, lam, _, _, _ = eval_Q(u_tilde, 0.0 * np.asarray(u_tilde), v_tilde, p)
    return lam * np.maximum(u_tilde, 1.0)


def solve_manifold(u_tilde: float, v_tilde: float, p: ModelParams,
                   tol: float = DEFAULT_TOL) -> ManifoldPoint:
    """Solve ``u_a + u_b = u_tilde``, ``Q(u_a, u_b, v_tilde) = 0``.

    Bisection narrows ``[0, u_tilde]`` to width ``1e-3 * max(u_tilde, 1)``,
    then Newton iterates polish the root, falling back to bisection
    whenever an iterate leaves the bracket.
    """
    _check(u_tilde, v_tilde)
    if not tol > 0:
        raise ValueError("tol must be > 0")
    u_tilde, v_tilde = float(u_tilde), float(v_tilde)
    if u_tilde == 0.0:
        return ManifoldPoint(0.0, v_tilde, 0.0, 0.0, 0.0, 0)
    ub, its = kernels.manifold_roots(np.array([u_tilde]), np.array([v_tilde]),
                                     kernels.pack(p), tol)
    ub = float(ub[0])
    ua = u_tilde - ub
    q = eval_Q(ua, ub, v_tilde, p)[0]
    return ManifoldPoint(u_tilde, v_tilde, ua, ub, abs(q), int(its[0]))


def manifold_ub(u, v, p: ModelParams, tol: float = DEFAULT_TOL, guess=None) -> np.ndarray:
    """Vectorised ``u_b*(u, v)`` over arrays of cells."""
    u = np.ascontiguousarray(u, dtype=float)
    v = np.ascontiguousarray(v, dtype=float)
    if np.any(u < 0) or np.any(v < 0):
        raise ValueError("domain error: arguments must be nonnegative")
    ub, _ = kernels.manifold_roots(u, v, kernels.pack(p), tol, guess)
    return ub


def _jac_arrays(ua, ub, v, p: ModelParams):
    d1, d2, d3, _ = grad_q(ua, ub, v, p)
    den = d1 - d2
    du_ub = d1 / den
    dv_ub = d3 / den
    return du_ub, dv_ub


def manifold_jacobian(pt: ManifoldPoint, p: ModelParams) -> ManifoldJacobian:
    """Implicit-function derivatives of the manifold map and of ``A``."""
    du_ub, dv_ub = _jac_arrays(pt.u_a_star, pt.u_b_star, pt.v_tilde, p)
    delta = p.d_b - p.d_a
    return ManifoldJacobian(
        du_ub=float(du_ub), dv_ub=float(dv_ub),
        du_ua=1.0 - float(du_ub), dv_ua=-float(dv_ub),
        dA_du=p.d_a + delta * float(du_ub), dA_dv=delta * float(dv_ub),
    )


def manifold_jacobian_field(u, v, ub, p: ModelParams):
    """Arrays ``(du_ub, dv_ub)`` at manifold points ``(u - ub, ub, v)``."""
    return _jac_arrays(np.asarray(u) - ub, ub, v, p)


def eval_A(u: float, v: float, p: ModelParams, tol: float = DEFAULT_TOL):
    """Cross-diffusion potential ``A = d_a u + (d_b - d_a) u_b*`` and its gradient."""
    pt = solve_manifold(u, v, p, tol)
    jac = manifold_jacobian(pt, p)
    A_val = p.d_a * pt.u_tilde + (p.d_b - p.d_a) * pt.u_b_star
    return A_val, jac.dA_du, jac.dA_dv


def A_field(u, ub, p: ModelParams) -> np.ndarray:
    return p.d_a * u + (p.d_b - p.d_a) * ub


def lattice_table(u_values, v_values, p: ModelParams, tol: float = DEFAULT_TOL):
    """Rows ``(u, v, u_a*, u_b*, du_ub, dv_ub, A)`` over a rectangular lattice."""
    rows = []
    for u in u_values:
        for v in v_values:
            pt = solve_manifold(u, v, p, tol)
            jac = manifold_jacobian(pt, p)
            A_val = p.d_a * pt.u_tilde + (p.d_b - p.d_a) * pt.u_b_star
            rows.append((pt.u_tilde, pt.v_tilde, pt.u_a_star, pt.u_b_star,
                         jac.du_ub, jac.dv_ub, A_val))
    return rows
