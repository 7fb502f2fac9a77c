# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-cell kernels; see ``slowfast._pykernels`` for the reference."""

import numpy as np
cimport numpy as cnp
from libc.math cimport pow, fabs, fmax

cnp.import_array()

# packed parameter layout, shared with _pykernels.pack
cdef enum:
    I_A = 0
    I_ALPHA = 1
    I_AF = 2
    I_CF = 3
    I_B = 4
    I_BETA = 5
    I_BF = 6
    I_DF = 7
    I_ETAB = 8
    I_BB = 9
    I_DD = 10
    I_GAMB = 11
    MAXIT = 200

cdef double XEPS = 8.881784197001252e-16  # 4 * machine epsilon


cdef inline double powm1(double x, double e) noexcept nogil:
    # x**(e - 1), skipping pow for the common integer exponents
    if e == 1.0:
        return 1.0
    if e == 2.0:
        return x
    return pow(x, e - 1.0)


cdef inline void qtilde(double u, double y, double v, const double* pk,
                        double* q, double* dq, double* lam) noexcept nogil:
    cdef double ua = u - y
    cdef double th = pk[I_A] + pk[I_AF] * ua + pk[I_CF] * v
    cdef double om = pk[I_B] + pk[I_BF] * y + pk[I_DF] * v
    cdef double tpa = powm1(th, pk[I_ALPHA])
    cdef double opb = powm1(om, pk[I_BETA])
    cdef double psi = tpa * th
    cdef double phi = opb * om
    cdef double dpsi = pk[I_ALPHA] * tpa
    cdef double dphi = pk[I_BETA] * opb
    q[0] = phi * y - psi * ua
    dq[0] = psi + pk[I_AF] * ua * dpsi + phi + pk[I_BF] * y * dphi
    lam[0] = psi + phi


cdef double root_one(double u, double v, double guess, int warm,
                     const double* pk, double tol, int* iters) noexcept nogil:
    cdef double lo = 0.0, hi = u, x, q, dq, lam, q0, dq0, lam0, scale, xn, w
    cdef double big = fmax(u, 1.0)
    cdef int k = 0
    iters[0] = 0
    if u <= 0.0:
        return 0.0
    qtilde(u, 0.0, v, pk, &q0, &dq0, &lam0)
    scale = lam0 * big
    if warm and guess > 0.0 and guess < u:
        x = guess
    else:
        while hi - lo > 1e-3 * big and k < MAXIT:
            x = 0.5 * (lo + hi)
            qtilde(u, x, v, pk, &q, &dq, &lam)
            k += 1
            if q < 0.0:
                lo = x
            else:
                hi = x
        x = 0.5 * (lo + hi)
    while k < MAXIT:
        qtilde(u, x, v, pk, &q, &dq, &lam)
        k += 1
        if fabs(q) <= tol * scale:
            break
        if q < 0.0:
            lo = x
        else:
            hi = x
        if hi - lo <= XEPS * big:
            break
        xn = x - q / dq
        if not (xn >= lo and xn <= hi):
            xn = 0.5 * (lo + hi)
        w = fabs(xn - x)
        x = xn
        if w <= XEPS * big:
            break
    iters[0] = k
    return x


def manifold_roots(double[::1] u, double[::1] v, const double[::1] pk,
                   double tol, guess=None):
    """Slow-manifold component ``u_b*`` per cell; returns ``(ub, iterations)``."""
    cdef Py_ssize_t n = u.shape[0], i
    out = np.empty(n)
    its = np.empty(n, dtype=np.int64)
    cdef double[::1] ov = out
    cdef cnp.int64_t[::1] iv = its
    cdef double[::1] g
    cdef int warm = guess is not None
    cdef int it
    if warm:
        g = np.ascontiguousarray(guess, dtype=np.float64)
    else:
        g = u
    with nogil:
        for i in range(n):
            ov[i] = root_one(u[i], v[i], g[i], warm, &pk[0], tol, &it)
            iv[i] = it
    return out, its


cdef inline void gfun(double u, double y, double v, double ub0, double dt,
                      double eps, const double* pk,
                      double* G, double* dG) noexcept nogil:
    cdef double ua = u - y
    cdef double th = pk[I_A] + pk[I_AF] * ua + pk[I_CF] * v
    cdef double om = pk[I_B] + pk[I_BF] * y + pk[I_DF] * v
    cdef double tpa = powm1(th, pk[I_ALPHA])
    cdef double opb = powm1(om, pk[I_BETA])
    cdef double psi = tpa * th
    cdef double phi = opb * om
    cdef double dpsi = pk[I_ALPHA] * tpa
    cdef double dphi = pk[I_BETA] * opb
    cdef double lam = psi + phi
    cdef double q = phi * y - psi * ua
    cdef double dq = psi + pk[I_AF] * ua * dpsi + phi + pk[I_BF] * y * dphi
    cdef double dlam = pk[I_BF] * dphi - pk[I_AF] * dpsi
    cdef double fb = pk[I_ETAB] * y * (1.0 - pk[I_BB] * y - pk[I_DD] * v) - pk[I_GAMB] * ua * y
    cdef double dfb = pk[I_ETAB] * (1.0 - 2.0 * pk[I_BB] * y - pk[I_DD] * v) - pk[I_GAMB] * (ua - y)
    cdef double s = dt / eps
    G[0] = y - ub0 - dt * fb + s * q / lam
    dG[0] = 1.0 - dt * dfb + s * (dq * lam - q * dlam) / (lam * lam)


cdef double stiff_one(double u, double v, double ub0, double dt, double eps,
                      const double* pk, int* fail) noexcept nogil:
    cdef double lo = 0.0, hi = u, x, G, dG, Gh, dGh, xn, w
    cdef double big = fmax(u, 1.0)
    cdef int k
    fail[0] = 0
    gfun(u, u, v, ub0, dt, eps, pk, &Gh, &dGh)
    if Gh < 0.0:
        fail[0] = 1
        return u
    if u <= 0.0:
        return 0.0
    x = ub0
    if not (x > lo and x < hi):
        x = 0.5 * (lo + hi)
    for k in range(MAXIT):
        gfun(u, x, v, ub0, dt, eps, pk, &G, &dG)
        if G == 0.0:
            return x
        if G < 0.0:
            lo = x
        else:
            hi = x
        if hi - lo <= XEPS * big:
            break
        xn = x - G / dG
        if not (dG > 0.0 and xn >= lo and xn <= hi):
            xn = 0.5 * (lo + hi)
        w = fabs(xn - x)
        x = xn
        if w <= XEPS * big:
            break
    else:
        fail[0] = 2
    return x


def stiff_ub_solve(double[::1] u, double[::1] v, double[::1] ub0, double dt,
                   double eps, const double[::1] pk):
    """Backward Euler update of ``u_b`` under the fast switching term.

    Returns ``(ub_new, fail)``; ``fail`` is 1 where the root would leave
    ``[0, u]`` and 2 where the iteration did not converge.
    """
    cdef Py_ssize_t n = u.shape[0], i
    out = np.empty(n)
    bad = np.zeros(n, dtype=np.int8)
    cdef double[::1] ov = out
    cdef cnp.int8_t[::1] bv = bad
    cdef int f
    with nogil:
        for i in range(n):
            ov[i] = stiff_one(u[i], v[i], ub0[i], dt, eps, &pk[0], &f)
            bv[i] = f
    return out, bad
