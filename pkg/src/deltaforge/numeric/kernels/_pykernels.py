"""Pure-numpy nascent-delta evaluators.

Three families delta_eps, each with derivative orders 0..4:

* gaussian:   exp(-(u/eps)^2) / (eps sqrt(pi)); derivatives via Hermite
  polynomials, d^n/dv^n exp(-v^2) = (-1)^n H_n(v) exp(-v^2).
* lorentzian: (1/pi) Im[(-1)^n n! / (u - i eps)^(n+1)].
* dirichlet:  sin(u/eps) / (pi u); derivatives of g(w) = sin(w)/w by the
  Leibniz closed form away from 0 and by the shared Taylor table near 0.

All families satisfy delta_eps^(n)(-u) = (-1)^n delta_eps^(n)(u) exactly in
floating point: every branch below is built from even/odd primitives.
"""

from __future__ import annotations

import math

import numpy as np

from ._series import MAX_ORDER, SERIES

BACKEND_NAME = "python"

FAMILIES = ("gaussian", "lorentzian", "dirichlet")

_SQRT_PI = math.sqrt(math.pi)


def _hermite(n: int, v: np.ndarray) -> np.ndarray:
    if n == 0:
        return np.ones_like(v)
    if n == 1:
        return 2.0 * v
    if n == 2:
        return 4.0 * v * v - 2.0
    if n == 3:
        return (8.0 * v * v - 12.0) * v
    v2 = v * v
    return (16.0 * v2 - 48.0) * v2 + 12.0


def _gaussian(eps: float, n: int, u: np.ndarray) -> np.ndarray:
    v = u / eps
    sign = -1.0 if n % 2 else 1.0
    return sign * _hermite(n, v) * np.exp(-v * v) / (eps ** (n + 1) * _SQRT_PI)


def _lorentzian(eps: float, n: int, u: np.ndarray) -> np.ndarray:
    z = u - 1j * eps
    zp = z.copy()
    for _ in range(n):
        zp = zp * z
    sign = -1.0 if n % 2 else 1.0
    return sign * math.factorial(n) / math.pi * (1.0 / zp).imag


def _sinc_deriv(n: int, w: np.ndarray) -> np.ndarray:
    """n-th derivative of sin(w)/w, stable through w = 0."""
    out = np.empty_like(w, dtype=float)
    small = np.abs(w) < 0.5
    ws = w[small]
    acc = np.zeros_like(ws)
    for power, coeff in SERIES[n]:
        acc += coeff * ws**power
    out[small] = acc
    wl = w[~small]
    sin_cycle = (np.sin(wl), np.cos(wl), -np.sin(wl), -np.cos(wl))
    accl = np.zeros_like(wl)
    for k in range(n + 1):
        m = n - k
        accl += (
            math.comb(n, k)
            * sin_cycle[k % 4]
            * ((-1.0) ** m)
            * math.factorial(m)
            * wl ** (-(m + 1))
        )
    out[~small] = accl
    return out


def _dirichlet(eps: float, n: int, u: np.ndarray) -> np.ndarray:
    p = 1.0 / eps
    return p ** (n + 1) / math.pi * _sinc_deriv(n, p * u)


def family_values(family: str, eps: float, n: int, u) -> np.ndarray:
    """delta_eps^(n)(u) for the named family, vectorized over u."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")
    if not 0 <= n <= MAX_ORDER:
        raise ValueError(f"derivative order must be 0..{MAX_ORDER}, got {n}")
    if eps <= 0:
        raise ValueError("eps must be positive")
    u = np.asarray(u, dtype=float)
    if family == "gaussian":
        return _gaussian(eps, n, u)
    if family == "lorentzian":
        return _lorentzian(eps, n, u)
    return _dirichlet(eps, n, u)
