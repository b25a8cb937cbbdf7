# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled inner loops: phase-field steps, 5-point explicit stepping and
batched tridiagonal elimination.  sbmlib._kernels_py provides the same
signatures in pure numpy; sbmlib.backend picks one at import time."""

import numpy as np

cimport cython
from libc.math cimport sqrt


def ac_step(double[:, ::1] phi, double[:, ::1] cxp, double[:, ::1] cxm,
            double[:, ::1] cyp, double[:, ::1] cym, double[:, ::1] e2d,
            double[:, ::1] bcoef, double w, double dt_m, double[:, ::1] out):
    """One explicit Allen-Cahn step: out = phi - dt*M*mu(phi)."""
    cdef Py_ssize_t nx = phi.shape[0], ny = phi.shape[1]
    cdef Py_ssize_t i, j
    cdef double p, pe, pw, pn, ps, lap, f, mu
    for i in range(nx):
        for j in range(ny):
            p = phi[i, j]
            pe = phi[i + 1, j] if i + 1 < nx else 0.0
            pw = phi[i - 1, j] if i > 0 else 0.0
            pn = phi[i, j + 1] if j + 1 < ny else 0.0
            ps = phi[i, j - 1] if j > 0 else 0.0
            lap = (cxp[i, j] * (pe - p) + cxm[i, j] * (pw - p)
                   + cyp[i, j] * (pn - p) + cym[i, j] * (ps - p))
            f = w * p * p * (1.0 - p) * (1.0 - p)
            if f < 0.0:
                f = 0.0
            mu = (2.0 * w * p * (1.0 - p) * (1.0 - 2.0 * p)
                  - e2d[i, j] * lap - bcoef[i, j] * sqrt(2.0 * f))
            out[i, j] = p - dt_m * mu
    return np.asarray(out)


def ch_mu(double[:, ::1] phi, double[:, ::1] cxp, double[:, ::1] cxm,
          double[:, ::1] cyp, double[:, ::1] cym, double[:, ::1] e2d,
          double[:, ::1] bcoef, double w, double[:, ::1] mu):
    """Chemical potential field for the Cahn-Hilliard step."""
    cdef Py_ssize_t nx = phi.shape[0], ny = phi.shape[1]
    cdef Py_ssize_t i, j
    cdef double p, pe, pw, pn, ps, lap, f
    for i in range(nx):
        for j in range(ny):
            p = phi[i, j]
            pe = phi[i + 1, j] if i + 1 < nx else 0.0
            pw = phi[i - 1, j] if i > 0 else 0.0
            pn = phi[i, j + 1] if j + 1 < ny else 0.0
            ps = phi[i, j - 1] if j > 0 else 0.0
            lap = (cxp[i, j] * (pe - p) + cxm[i, j] * (pw - p)
                   + cyp[i, j] * (pn - p) + cym[i, j] * (ps - p))
            f = w * p * p * (1.0 - p) * (1.0 - p)
            if f < 0.0:
                f = 0.0
            mu[i, j] = (2.0 * w * p * (1.0 - p) * (1.0 - 2.0 * p)
                        - e2d[i, j] * lap - bcoef[i, j] * sqrt(2.0 * f))
    return np.asarray(mu)


def ch_step(double[:, ::1] phi, double[:, ::1] mu,
            double[:, ::1] dxp, double[:, ::1] dxm,
            double[:, ::1] dyp, double[:, ::1] dym,
            double[:, ::1] inv_den, double[:, ::1] jn_term,
            double dt, double[:, ::1] out):
    """out = phi + dt*(div(psi M grad mu)/den + jn_term) given mu."""
    cdef Py_ssize_t nx = phi.shape[0], ny = phi.shape[1]
    cdef Py_ssize_t i, j
    cdef double m, me, mw, mn, ms, div
    for i in range(nx):
        for j in range(ny):
            m = mu[i, j]
            me = mu[i + 1, j] if i + 1 < nx else 0.0
            mw = mu[i - 1, j] if i > 0 else 0.0
            mn = mu[i, j + 1] if j + 1 < ny else 0.0
            ms = mu[i, j - 1] if j > 0 else 0.0
            div = (dxp[i, j] * (me - m) + dxm[i, j] * (mw - m)
                   + dyp[i, j] * (mn - m) + dym[i, j] * (ms - m))
            out[i, j] = phi[i, j] + dt * (div * inv_den[i, j] + jn_term[i, j])
    return np.asarray(out)


def explicit_step_5pt(double[:, ::1] c, double[:, ::1] cxp, double[:, ::1] cxm,
                      double[:, ::1] cyp, double[:, ::1] cym,
                      double[:, ::1] cdiag, double[:, ::1] src,
                      double dt, double[:, ::1] out):
    """out = c + dt*(sum of face terms + cdiag*c + src) for a 5-point stencil."""
    cdef Py_ssize_t nx = c.shape[0], ny = c.shape[1]
    cdef Py_ssize_t i, j
    cdef double v, ve, vw, vn, vs
    for i in range(nx):
        for j in range(ny):
            v = c[i, j]
            ve = c[i + 1, j] if i + 1 < nx else 0.0
            vw = c[i - 1, j] if i > 0 else 0.0
            vn = c[i, j + 1] if j + 1 < ny else 0.0
            vs = c[i, j - 1] if j > 0 else 0.0
            out[i, j] = v + dt * (cxp[i, j] * (ve - v) + cxm[i, j] * (vw - v)
                                  + cyp[i, j] * (vn - v) + cym[i, j] * (vs - v)
                                  + cdiag[i, j] * v + src[i, j])
    return np.asarray(out)


ctypedef fused tri_t:
    double
    double complex


def thomas_batch(tri_t[:, ::1] sub, tri_t[:, ::1] diag, tri_t[:, ::1] sup,
                 tri_t[:, ::1] rhs, tri_t[:, ::1] out):
    """Solve many tridiagonal systems along the last axis.

    sub[k,0] and sup[k,n-1] are ignored.  Standard forward elimination and
    back substitution; no pivoting (callers guarantee diagonal dominance).
    """
    cdef Py_ssize_t nlines = diag.shape[0], n = diag.shape[1]
    cdef Py_ssize_t k, i
    cdef tri_t m
    cp = np.empty((nlines, n), dtype=np.asarray(diag).dtype)
    dp = np.empty((nlines, n), dtype=np.asarray(diag).dtype)
    cdef tri_t[:, ::1] cpv = cp
    cdef tri_t[:, ::1] dpv = dp
    for k in range(nlines):
        cpv[k, 0] = sup[k, 0] / diag[k, 0]
        dpv[k, 0] = rhs[k, 0] / diag[k, 0]
        for i in range(1, n):
            m = diag[k, i] - sub[k, i] * cpv[k, i - 1]
            cpv[k, i] = sup[k, i] / m
            dpv[k, i] = (rhs[k, i] - sub[k, i] * dpv[k, i - 1]) / m
        out[k, n - 1] = dpv[k, n - 1]
        for i in range(n - 2, -1, -1):
            out[k, i] = dpv[k, i] - cpv[k, i] * out[k, i + 1]
    return np.asarray(out)
