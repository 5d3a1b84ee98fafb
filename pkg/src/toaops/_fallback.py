"""Pure numpy implementation of the compiled kernels in ``_core``.

Branch structure mirrors ``_core.pyx`` so both backends agree to rounding.
"""

import numpy as np
from scipy import special

SERIES_BOUND = 4.0
SERIES_POS_BOUND = 1e4
MAX_TERMS = 500


def _series(b, z):
    z = np.asarray(z, dtype=float)
    term = np.ones_like(z)
    total = np.ones_like(z)
    active = np.ones(z.shape, dtype=bool)
    for k in range(1, MAX_TERMS + 1):
        term = np.where(active, term * z / ((b + k - 1.0) * k), 0.0)
        total = total + term
        active &= np.abs(term) >= 1e-16 * np.abs(total)
        if not active.any():
            break
    return total


def hyp0f1_array(b, z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    az = np.abs(z)
    small = az <= SERIES_BOUND
    out[small] = _series(b, z[small])
    pos = (~small) & (z > 0)
    neg = (~small) & (z < 0)
    s_pos = 2.0 * np.sqrt(z[pos])
    s_neg = 2.0 * np.sqrt(-z[neg])
    if b == 1.0:
        out[pos] = special.i0(s_pos)
        out[neg] = special.j0(s_neg)
    elif b == 2.0:
        out[pos] = special.i1(s_pos) / (0.5 * s_pos)
        out[neg] = special.j1(s_neg) / (0.5 * s_neg)
    else:
        zp = z[pos]
        mid = zp <= SERIES_POS_BOUND
        vals = np.empty_like(zp)
        vals[mid] = _series(b, zp[mid])
        sp = s_pos[~mid]
        vals[~mid] = special.gamma(b) * (0.5 * sp) ** (1.0 - b) * special.iv(b - 1.0, sp)
        out[pos] = vals
        out[neg] = special.gamma(b) * (0.5 * s_neg) ** (1.0 - b) * special.jv(b - 1.0, s_neg)
    return out


def hyp0f1_scalar(b, z):
    return float(hyp0f1_array(b, np.array([z], dtype=float))[0])


def weighted_rowsum(b, z, g):
    z = np.asarray(z, dtype=float)
    g = np.asarray(g, dtype=float)
    if z.shape != g.shape:
        raise ValueError("z and g must have the same shape")
    return np.sum(g * hyp0f1_array(b, z), axis=1)
