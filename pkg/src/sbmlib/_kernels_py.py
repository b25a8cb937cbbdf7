"""Pure-numpy fallback for the compiled kernels.

Same signatures and semantics as sbmlib._kernels; edge handling relies on
the face-coefficient arrays being zero on the outermost faces, which makes
the wrapped values introduced by np.roll irrelevant.
"""

from __future__ import annotations

import numpy as np


def _neighbor_sums(v, cxp, cxm, cyp, cym):
    ve = np.roll(v, -1, axis=0)
    vw = np.roll(v, 1, axis=0)
    vn = np.roll(v, -1, axis=1)
    vs = np.roll(v, 1, axis=1)
    return cxp * (ve - v) + cxm * (vw - v) + cyp * (vn - v) + cym * (vs - v)


def _mu(phi, cxp, cxm, cyp, cym, e2d, bcoef, w):
    lap = _neighbor_sums(phi, cxp, cxm, cyp, cym)
    f = np.maximum(w * phi**2 * (1.0 - phi) ** 2, 0.0)
    return 2.0 * w * phi * (1.0 - phi) * (1.0 - 2.0 * phi) - e2d * lap - bcoef * np.sqrt(2.0 * f)


def ac_step(phi, cxp, cxm, cyp, cym, e2d, bcoef, w, dt_m, out):
    out[...] = phi - dt_m * _mu(phi, cxp, cxm, cyp, cym, e2d, bcoef, w)
    return out


def ch_mu(phi, cxp, cxm, cyp, cym, e2d, bcoef, w, mu):
    mu[...] = _mu(phi, cxp, cxm, cyp, cym, e2d, bcoef, w)
    return mu


def ch_step(phi, mu, dxp, dxm, dyp, dym, inv_den, jn_term, dt, out):
    div = _neighbor_sums(mu, dxp, dxm, dyp, dym)
    out[...] = phi + dt * (div * inv_den + jn_term)
    return out


def explicit_step_5pt(c, cxp, cxm, cyp, cym, cdiag, src, dt, out):
    out[...] = c + dt * (_neighbor_sums(c, cxp, cxm, cyp, cym) + cdiag * c + src)
    return out


def thomas_batch(sub, diag, sup, rhs, out):
    n = diag.shape[1]
    cp = np.empty_like(diag)
    dp = np.empty_like(rhs)
    cp[:, 0] = sup[:, 0] / diag[:, 0]
    dp[:, 0] = rhs[:, 0] / diag[:, 0]
    for i in range(1, n):
        m = diag[:, i] - sub[:, i] * cp[:, i - 1]
        cp[:, i] = sup[:, i] / m
        dp[:, i] = (rhs[:, i] - sub[:, i] * dp[:, i - 1]) / m
    out[:, -1] = dp[:, -1]
    for i in range(n - 2, -1, -1):
        out[:, i] = dp[:, i] - cp[:, i] * out[:, i + 1]
    return out
