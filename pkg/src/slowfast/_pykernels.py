"""Pure numpy versions of the per-cell kernels.

Same algorithms as the compiled module, vectorised across cells: every
cell runs its own bracketed Newton iteration and drops out once converged.
"""

from __future__ import annotations

import numpy as np

from .model import ModelParams

MAXIT = 200
XEPS = 4.0 * np.finfo(float).eps


def pack(p: ModelParams) -> np.ndarray:
    """Flatten the constants the kernels need, in the compiled layout."""
    return np.array([
        p.A_off, p.alpha, p.a_f, p.c_f,
        p.B_off, p.beta, p.b_f, p.d_f,
        p.eta_b, p.b, p.d, p.gamma_b,
    ], dtype=float)


def _powm1(x, e):
    # x**(e - 1), matching the compiled special cases
    if e == 1.0:
        return np.ones_like(x)
    if e == 2.0:
        return x
    return x ** (e - 1.0)


def _qtilde(u, y, v, pk):
    A, al, af, cf, B, be, bf, df = pk[:8]
    ua = u - y
    th = A + af * ua + cf * v
    om = B + bf * y + df * v
    tpa = _powm1(th, al)
    opb = _powm1(om, be)
    psi = tpa * th
    phi = opb * om
    dpsi = al * tpa
    dphi = be * opb
    q = phi * y - psi * ua
    dq = psi + af * ua * dpsi + phi + bf * y * dphi
    return q, dq, psi + phi


def manifold_roots(u, v, pk, tol, guess=None):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    n = u.shape[0]
    out = np.zeros(n)
    its = np.zeros(n, dtype=np.int64)
    idx = np.flatnonzero(u > 0.0)
    if idx.size == 0:
        return out, its
    uu, vv = u[idx], v[idx]
    big = np.maximum(uu, 1.0)
    _, _, lam0 = _qtilde(uu, 0.0, vv, pk)
    scale = lam0 * big
    lo = np.zeros_like(uu)
    hi = uu.copy()
    k = np.zeros(idx.size, dtype=np.int64)

    if guess is not None:
        g = np.asarray(guess, dtype=float)[idx]
        use = (g > 0.0) & (g < uu)
    else:
        g = np.zeros_like(uu)
        use = np.zeros(idx.size, dtype=bool)
    bis = ~use
    while True:
        act = bis & (hi - lo > 1e-3 * big) & (k < MAXIT)
        if not act.any():
            break
        x = 0.5 * (lo + hi)
        q, _, _ = _qtilde(uu, x, vv, pk)
        k[act] += 1
        neg = q < 0.0
        lo = np.where(act & neg, x, lo)
        hi = np.where(act & ~neg, x, hi)
    x = np.where(use, g, 0.5 * (lo + hi))

    act = np.ones(idx.size, dtype=bool)
    while True:
        act &= k < MAXIT
        if not act.any():
            break
        q, dq, _ = _qtilde(uu, x, vv, pk)
        k[act] += 1
        done = np.abs(q) <= tol * scale
        act &= ~done
        neg = q < 0.0
        lo = np.where(act & neg, x, lo)
        hi = np.where(act & ~neg, x, hi)
        act &= hi - lo > XEPS * big
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - q / dq
        inside = (xn >= lo) & (xn <= hi)
        xn = np.where(inside, xn, 0.5 * (lo + hi))
        step = np.abs(xn - x)
        x = np.where(act, xn, x)
        act &= step > XEPS * big
    out[idx] = x
    its[idx] = k
    return out, its


def _gfun(u, y, v, ub0, dt, eps, pk):
    A, al, af, cf, B, be, bf, df, etab, bb, dd, gamb = pk
    ua = u - y
    th = A + af * ua + cf * v
    om = B + bf * y + df * v
    tpa = _powm1(th, al)
    opb = _powm1(om, be)
    psi = tpa * th
    phi = opb * om
    dpsi = al * tpa
    dphi = be * opb
    lam = psi + phi
    q = phi * y - psi * ua
    dq = psi + af * ua * dpsi + phi + bf * y * dphi
    dlam = bf * dphi - af * dpsi
    fb = etab * y * (1.0 - bb * y - dd * v) - gamb * ua * y
    dfb = etab * (1.0 - 2.0 * bb * y - dd * v) - gamb * (ua - y)
    s = dt / eps
    G = y - ub0 - dt * fb + s * q / lam
    dG = 1.0 - dt * dfb + s * (dq * lam - q * dlam) / (lam * lam)
    return G, dG


def stiff_ub_solve(u, v, ub0, dt, eps, pk):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    ub0 = np.asarray(ub0, dtype=float)
    n = u.shape[0]
    fail = np.zeros(n, dtype=np.int8)
    Gh, _ = _gfun(u, u, v, ub0, dt, eps, pk)
    fail[Gh < 0.0] = 1
    out = np.where(Gh < 0.0, u, 0.0)
    idx = np.flatnonzero((Gh >= 0.0) & (u > 0.0))
    if idx.size == 0:
        return out, fail
    uu, vv, bb0 = u[idx], v[idx], ub0[idx]
    big = np.maximum(uu, 1.0)
    lo = np.zeros_like(uu)
    hi = uu.copy()
    x = np.where((bb0 > lo) & (bb0 < hi), bb0, 0.5 * hi)
    act = np.ones(idx.size, dtype=bool)
    for _ in range(MAXIT):
        if not act.any():
            break
        G, dG = _gfun(uu, x, vv, bb0, dt, eps, pk)
        act &= G != 0.0
        neg = G < 0.0
        lo = np.where(act & neg, x, lo)
        hi = np.where(act & ~neg, x, hi)
        act &= hi - lo > XEPS * big
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - G / dG
        ok = (dG > 0.0) & (xn >= lo) & (xn <= hi)
        xn = np.where(ok, xn, 0.5 * (lo + hi))
        step = np.abs(xn - x)
        x = np.where(act, xn, x)
        act &= step > XEPS * big
    else:
        fail[idx[act]] = 2
    out[idx] = x
    return out, fail
