"""Pure-Python versions of the compiled inner loops in ``_kernels.pyx``."""
import math

import numpy as np


def ohmic_gamma(w, beta, cutoff):
    x = abs(w)
    if x == 0.0:
        return 2.0 * math.pi / beta
    jx = x * cutoff * cutoff / (cutoff * cutoff + x * x)
    base = 2.0 * math.pi * jx / (-math.expm1(-beta * x))
    if w > 0.0:
        return base
    return base * math.exp(-beta * x)


def ohmic_pv_integrand(u, omega, beta, cutoff):
    return (ohmic_gamma(omega - u, beta, cutoff)
            - ohmic_gamma(omega + u, beta, cutoff)) / u


def ohmic_pv_capsule():
    return None


def propagate_uniform(prop, v0, nsteps):
    """Apply ``prop`` repeatedly to ``v0``; row k of the result is prop**k @ v0."""
    out = np.empty((nsteps + 1, v0.shape[0]), dtype=np.complex128)
    out[0] = v0
    for k in range(1, nsteps + 1):
        out[k] = prop @ out[k - 1]
    return out


def sliding_pearson(a, b, window, floor):
    """Pearson correlation over every length-``window`` run of ``a`` and ``b``.

    Windows where either series has a standard deviation at or below ``floor``
    get NaN.
    """
    n = a.shape[0]
    m = n - window + 1
    if m <= 0:
        return np.empty(0)
    wa = np.lib.stride_tricks.sliding_window_view(a, window)
    wb = np.lib.stride_tricks.sliding_window_view(b, window)
    da = wa - wa.mean(axis=1, keepdims=True)
    db = wb - wb.mean(axis=1, keepdims=True)
    va = np.einsum("ij,ij->i", da, da) / window
    vb = np.einsum("ij,ij->i", db, db) / window
    cov = np.einsum("ij,ij->i", da, db) / window
    out = np.full(m, np.nan)
    ok = (va > floor * floor) & (vb > floor * floor)
    out[ok] = cov[ok] / np.sqrt(va[ok] * vb[ok])
    return out
