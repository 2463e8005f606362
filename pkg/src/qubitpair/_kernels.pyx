# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.

Pure-Python equivalents with identical signatures live in ``_kernels_py``;
``qubitpair.kernels`` picks one of the two at import time.
"""
from libc.math cimport exp, expm1, fabs, sqrt, M_PI, NAN
from cpython.pycapsule cimport PyCapsule_New

import numpy as np


cdef inline double _ohmic_gamma(double w, double beta, double cutoff) nogil:
    cdef double x = fabs(w)
    cdef double jx, base
    if x == 0.0:
        return 2.0 * M_PI / beta
    jx = x * cutoff * cutoff / (cutoff * cutoff + x * x)
    base = 2.0 * M_PI * jx / (-expm1(-beta * x))
    if w > 0.0:
        return base
    return base * exp(-beta * x)


cdef double _ohmic_pv_integrand(int n, double *xx, void *user_data) nogil:
    # user_data: [omega, beta, cutoff]
    cdef double *p = <double *> user_data
    cdef double u = xx[0]
    return (_ohmic_gamma(p[0] - u, p[1], p[2])
            - _ohmic_gamma(p[0] + u, p[1], p[2])) / u


def ohmic_pv_capsule():
    """PyCapsule for ``scipy.LowLevelCallable`` wrapping the paired PV integrand."""
    return PyCapsule_New(<void *> _ohmic_pv_integrand,
                         b"double (int, double *, void *)", NULL)


def ohmic_gamma(double w, double beta, double cutoff):
    return _ohmic_gamma(w, beta, cutoff)


def propagate_uniform(double complex[:, ::1] prop, double complex[::1] v0,
                      Py_ssize_t nsteps):
    """Apply ``prop`` repeatedly to ``v0``; row k of the result is prop**k @ v0."""
    cdef Py_ssize_t n = v0.shape[0]
    out_arr = np.empty((nsteps + 1, n), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef Py_ssize_t k, i, j
    cdef double complex acc
    for i in range(n):
        out[0, i] = v0[i]
    with nogil:
        for k in range(1, nsteps + 1):
            for i in range(n):
                acc = 0
                for j in range(n):
                    acc = acc + prop[i, j] * out[k - 1, j]
                out[k, i] = acc
    return out_arr


def sliding_pearson(double[::1] a, double[::1] b, Py_ssize_t window,
                    double floor):
    """Pearson correlation over every length-``window`` run of ``a`` and ``b``.

    Entry k covers samples k .. k+window-1.  Windows where either series has a
    standard deviation below ``floor`` get NaN; the caller masks them.
    Running sums are rebuilt from scratch every ``window`` steps to bound drift.
    """
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = n - window + 1
    if m <= 0:
        return np.empty(0)
    out_arr = np.empty(m)
    cdef double[::1] out = out_arr
    cdef double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0
    cdef double ma, mb, va, vb, cov, w = <double> window
    cdef Py_ssize_t k, i
    with nogil:
        for k in range(m):
            if k % window == 0:
                sa = sb = saa = sbb = sab = 0
                for i in range(k, k + window):
                    sa += a[i]
                    sb += b[i]
                    saa += a[i] * a[i]
                    sbb += b[i] * b[i]
                    sab += a[i] * b[i]
            else:
                i = k + window - 1
                sa += a[i] - a[k - 1]
                sb += b[i] - b[k - 1]
                saa += a[i] * a[i] - a[k - 1] * a[k - 1]
                sbb += b[i] * b[i] - b[k - 1] * b[k - 1]
                sab += a[i] * b[i] - a[k - 1] * b[k - 1]
            ma = sa / w
            mb = sb / w
            va = saa / w - ma * ma
            vb = sbb / w - mb * mb
            cov = sab / w - ma * mb
            if va <= floor * floor or vb <= floor * floor:
                out[k] = NAN
            else:
                out[k] = cov / sqrt(va * vb)
    return out_arr
