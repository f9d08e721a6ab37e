# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of the pure-numpy kernel backend.

Same three nascent-delta families, same derivative orders, same small-|w|
series table; scalar C loops instead of numpy temporaries.
"""

import numpy as np

from libc.math cimport sin, cos, exp, sqrt, M_PI

from ._series import MAX_ORDER as _SER_MAX, SERIES as _SER_TABLE

BACKEND_NAME = "c"
FAMILIES = ("gaussian", "lorentzian", "dirichlet")
MAX_ORDER = _SER_MAX

cdef double SQRT_PI = sqrt(M_PI)
cdef double complex IM = 1j

cdef double[6] FACT
FACT[0] = 1.0; FACT[1] = 1.0; FACT[2] = 2.0
FACT[3] = 6.0; FACT[4] = 24.0; FACT[5] = 120.0

cdef int SER_LEN[5]
cdef int SER_POW0[5]
cdef double SER_COEF[5][16]

def _init_series():
    for n, row in enumerate(_SER_TABLE):
        SER_LEN[n] = len(row)
        SER_POW0[n] = row[0][0]
        for i, (_p, c) in enumerate(row):
            SER_COEF[n][i] = c

_init_series()


cdef inline double _ipow(double x, int k) nogil:
    cdef double out = 1.0
    cdef int i
    for i in range(k):
        out *= x
    return out


cdef inline double _hermite(int n, double v) nogil:
    if n == 0:
        return 1.0
    if n == 1:
        return 2.0 * v
    if n == 2:
        return 4.0 * v * v - 2.0
    if n == 3:
        return (8.0 * v * v - 12.0) * v
    return (16.0 * v * v * v * v - 48.0 * v * v) + 12.0


cdef void _gaussian(double eps, int n, double[::1] u, double[::1] out) nogil:
    cdef Py_ssize_t i
    cdef double v
    cdef double sign = -1.0 if n % 2 else 1.0
    cdef double norm = sign / (_ipow(eps, n + 1) * SQRT_PI)
    for i in range(u.shape[0]):
        v = u[i] / eps
        out[i] = norm * _hermite(n, v) * exp(-v * v)


cdef void _lorentzian(double eps, int n, double[::1] u, double[::1] out) nogil:
    cdef Py_ssize_t i
    cdef int k
    cdef double complex z, zp
    cdef double sign = -1.0 if n % 2 else 1.0
    cdef double norm = sign * FACT[n] / M_PI
    for i in range(u.shape[0]):
        z = u[i] - eps * IM
        zp = z
        for k in range(n):
            zp = zp * z
        out[i] = norm * (1.0 / zp).imag


cdef double _sinc_deriv(int n, double w) nogil:
    cdef double acc = 0.0
    cdef double w2, wp, winv
    cdef int i, k, m, cyc
    cdef double trig
    if w < 0.5 and w > -0.5:
        w2 = w * w
        wp = 1.0 if SER_POW0[n] == 0 else w
        for i in range(SER_LEN[n]):
            acc += SER_COEF[n][i] * wp
            wp *= w2
        return acc
    winv = 1.0 / w
    for k in range(n + 1):
        m = n - k
        cyc = k % 4
        if cyc == 0:
            trig = sin(w)
        elif cyc == 1:
            trig = cos(w)
        elif cyc == 2:
            trig = -sin(w)
        else:
            trig = -cos(w)
        acc += (
            (FACT[n] / (FACT[k] * FACT[m]))
            * trig
            * (-1.0 if m % 2 else 1.0)
            * FACT[m]
            * _ipow(winv, m + 1)
        )
    return acc


cdef void _dirichlet(double eps, int n, double[::1] u, double[::1] out) nogil:
    cdef Py_ssize_t i
    cdef double p = 1.0 / eps
    cdef double norm = _ipow(p, n + 1) / M_PI
    for i in range(u.shape[0]):
        out[i] = norm * _sinc_deriv(n, p * u[i])


def family_values(family, double eps, int n, u):
    """delta_eps^(n)(u) for the named family, vectorized over u."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")
    if not 0 <= n <= MAX_ORDER:
        raise ValueError(f"derivative order must be 0..{MAX_ORDER}, got {n}")
    if eps <= 0:
        raise ValueError("eps must be positive")
    arr = np.ascontiguousarray(u, dtype=np.float64)
    flat = arr.reshape(-1)
    out = np.empty_like(flat)
    cdef double[::1] uv = flat
    cdef double[::1] ov = out
    if family == "gaussian":
        _gaussian(eps, n, uv, ov)
    elif family == "lorentzian":
        _lorentzian(eps, n, uv, ov)
    else:
        _dirichlet(eps, n, uv, ov)
    return out.reshape(arr.shape)
