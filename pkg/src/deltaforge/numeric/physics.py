"""Physics-flavoured numerical validations.

Three independent checks that the delta-function formalism the symbolic layer
manipulates actually emerges from honest integrals:

* fourier_kernel_check  -- the truncated momentum completeness integral is a
  closed-form oscillatory kernel; pairing it with a smooth function
  reproduces point evaluation as the cutoff grows.
* diffraction_magnitude -- a quadratic-phase integral damped by exp(-eta p^2)
  is extrapolated to eta -> 0 and compared with the stationary-phase
  magnitude sqrt(pi/beta).
* ehrenfest_check       -- grid quadrature over an exactly known spreading
  gaussian packet confirms d<x>/dt = <p>/m and d<p>/dt = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..expr import EngineError
from .checks import ConvergenceReport
from .funcs import F_GAUSS, TestFunction
from .kernels import family_values
from .quadrature import DEFAULT_TOL, adaptive_quad

__all__ = [
    "GridTooSmall",
    "RegularizationFailure",
    "Wavepacket",
    "diffraction_magnitude",
    "ehrenfest_check",
    "fourier_kernel_check",
]


class RegularizationFailure(EngineError):
    """The damped integral sequence did not stabilize enough to extrapolate."""


class GridTooSmall(EngineError):
    """The spatial grid clips the wave packet; moments would be unreliable."""


def fourier_kernel_check(
    f: TestFunction | None = None,
    *,
    x0: float = 0.3,
    cutoffs=(10.0, 30.0, 100.0),
    hbar: float = 1.0,
) -> ConvergenceReport:
    """Truncating the momentum completeness integral at |p| <= P gives the
    closed-form kernel sin(P y / hbar) / (pi y); pairing that kernel with f
    must converge to f(x0) as P grows.  The kernel is evaluated through the
    same compiled family routines the rule checks use (width hbar/P), so this
    exercises the full numeric stack end to end."""
    f = f if f is not None else F_GAUSS
    target = f.at(x0)
    rep = ConvergenceReport(rule_id="completeness-kernel", family="dirichlet", hbar=float(hbar))
    half = 45.0
    residuals = []
    for P in cutoffs:
        eps = hbar / P
        step = max(2.5 * eps, 2 * half / 4096.0)
        bps = list(np.arange(x0 - half, x0 + half, step))
        val, _, _ = adaptive_quad(
            lambda x: f(x) * family_values("dirichlet", eps, 0, x - x0),
            x0 - half,
            x0 + half,
            tol=DEFAULT_TOL,
            breakpoints=bps,
        )
        res = abs(float(val) - target)
        residuals.append(res)
        rep.rows.append({"epsilon": eps, "cutoff": float(P), "residual": res})
    floor = 1e-12 * (1.0 + abs(target))
    live = [r for r in residuals if r > floor]
    rep.order = float("inf") if len(live) < 2 else 0.0
    if len(live) >= 2:
        es = [row["epsilon"] for row, r in zip(rep.rows, residuals) if r > floor]
        rep.order = float(np.polyfit(np.log(es), np.log(live), 1)[0])
    monotone = all(b <= a * 1.10 for a, b in zip(residuals, residuals[1:]) if a > floor)
    rep.details["target"] = target
    rep.passed = bool(monotone and residuals[-1] <= 1e-3 * (1.0 + abs(target)))
    return rep


def _exact_diffraction(alpha: float, beta: float, eta: float) -> complex:
    # ∫ exp(i(alpha p + beta p^2) - eta p^2) dp, Re(eta - i beta) > 0.
    z = complex(eta, -beta)
    return np.sqrt(math.pi / z) * np.exp(-alpha * alpha / (4.0 * z))


def diffraction_magnitude(
    alpha: float,
    beta: float,
    *,
    etas=(0.08, 0.04, 0.02, 0.01),
    cross_check: bool = True,
) -> dict:
    """Quadratic-phase integral with gaussian damping, extrapolated to zero
    damping.  The stationary-phase prediction for the modulus is
    sqrt(pi/|beta|), independent of alpha and of the sign of beta."""
    if beta == 0:
        raise ValueError("beta must be nonzero")
    mags = []
    quad_err = 0.0
    for eta in etas:
        lim = 7.0 / math.sqrt(eta)
        # Seed panels at half the local oscillation period at the window edge.
        freq = abs(alpha) + 2.0 * abs(beta) * lim
        step = max(math.pi / freq / 2.0, 2 * lim / 30000.0)
        bps = list(np.arange(-lim, lim, step))

        def integrand(p, eta=eta):
            p = np.asarray(p)
            return np.exp(-eta * p * p + 1j * (alpha * p + beta * p * p))

        re, _, _ = adaptive_quad(lambda p: np.real(integrand(p)), -lim, lim,
                                 tol=1e-9, breakpoints=bps)
        im, _, _ = adaptive_quad(lambda p: np.imag(integrand(p)), -lim, lim,
                                 tol=1e-9, breakpoints=bps)
        val = complex(re, im)
        if cross_check:
            quad_err = max(quad_err, abs(val - _exact_diffraction(alpha, beta, eta)))
        mags.append(abs(val))
    # Richardson extrapolation: the interpolating polynomial through all
    # (eta, |I|) nodes, evaluated at eta = 0.  A leave-one-out refit guards
    # against sequences that are not yet in the smooth small-eta regime.
    deg = len(etas) - 1
    estimate = float(np.polyval(np.polyfit(np.array(etas), np.array(mags), deg), 0.0))
    est_loo = float(
        np.polyval(np.polyfit(np.array(etas[1:]), np.array(mags[1:]), deg - 1), 0.0)
    )
    if abs(estimate - est_loo) > 0.02 * abs(estimate):
        raise RegularizationFailure(
            f"eta-extrapolation unstable: {estimate:.6g} vs {est_loo:.6g} "
            "after dropping the coarsest damping"
        )
    exact = math.sqrt(math.pi / abs(beta))
    rel_err = abs(estimate - exact) / exact
    return {
        "alpha": alpha,
        "beta": beta,
        "etas": list(etas),
        "magnitudes": mags,
        "estimate": estimate,
        "exact": exact,
        "rel_err": rel_err,
        "quadrature_error": quad_err,
        "passed": bool(rel_err <= 1e-3 and quad_err <= 1e-6),
    }


@dataclass(frozen=True)
class Wavepacket:
    """Free gaussian packet with exactly known evolution.

    psi(x, t) = (2 pi sigma^2)^{-1/4} a^{-1/2}
                * exp(-(x - xc)^2 / (4 sigma^2 a) + i p0 (x - x0)/hbar
                      - i p0^2 t / (2 m hbar))
    with a = 1 + i hbar t / (2 m sigma^2) and xc = x0 + p0 t / m.
    """

    m: float = 1.3
    sigma: float = 0.8
    x0: float = -0.4
    p0: float = 0.7
    hbar: float = 1.0

    def _a(self, t: float) -> complex:
        return 1.0 + 1j * self.hbar * t / (2.0 * self.m * self.sigma**2)

    def center(self, t: float) -> float:
        return self.x0 + self.p0 * t / self.m

    def psi(self, x: np.ndarray, t: float) -> np.ndarray:
        a = self._a(t)
        xc = self.center(t)
        norm = (2.0 * math.pi * self.sigma**2) ** (-0.25) * a ** (-0.5)
        phase = (
            -((x - xc) ** 2) / (4.0 * self.sigma**2 * a)
            + 1j * self.p0 * (x - self.x0) / self.hbar
            - 1j * self.p0**2 * t / (2.0 * self.m * self.hbar)
        )
        return norm * np.exp(phase)

    def dpsi_dx(self, x: np.ndarray, t: float) -> np.ndarray:
        a = self._a(t)
        xc = self.center(t)
        return self.psi(x, t) * (-(x - xc) / (2.0 * self.sigma**2 * a) + 1j * self.p0 / self.hbar)

    def width(self, t: float) -> float:
        return self.sigma * abs(self._a(t))


def _moments(wp: Wavepacket, t: float, n_points: int, halfwidths: float):
    sig = wp.width(t)
    xc = wp.center(t)
    x = np.linspace(xc - halfwidths * sig, xc + halfwidths * sig, n_points)
    psi = wp.psi(x, t)
    dpsi = wp.dpsi_dx(x, t)
    dens = np.abs(psi) ** 2
    norm = float(np.trapezoid(dens, x))
    if abs(norm - 1.0) > 1e-8:
        raise GridTooSmall(
            f"wave packet norm on grid is {norm!r}; enlarge the window or grid"
        )
    ex = float(np.trapezoid(x * dens, x))
    ep = float(np.real(np.trapezoid(np.conj(psi) * (-1j * wp.hbar) * dpsi, x)))
    return ex, ep


def ehrenfest_check(
    wp: Wavepacket | None = None,
    *,
    times=(0.0, 0.4, 1.1),
    dt: float = 1e-3,
    n_points: int = 4001,
    halfwidths: float = 12.0,
    tol: float = 1e-6,
) -> dict:
    """Check d<x>/dt = <p>/m and d<p>/dt = 0 on an exact spreading packet
    using central time differences of grid-quadrature moments."""
    wp = wp if wp is not None else Wavepacket()
    rows = []
    worst1 = worst2 = 0.0
    for t in times:
        xm, pm = _moments(wp, t, n_points, halfwidths)
        xp_, pp_ = _moments(wp, t + dt, n_points, halfwidths)
        xm_, pm_ = _moments(wp, t - dt, n_points, halfwidths)
        dxdt = (xp_ - xm_) / (2.0 * dt)
        dpdt = (pp_ - pm_) / (2.0 * dt)
        r1 = abs(dxdt - pm / wp.m)
        r2 = abs(dpdt)
        worst1, worst2 = max(worst1, r1), max(worst2, r2)
        rows.append(
            {"t": t, "dx_dt": dxdt, "p_over_m": pm / wp.m,
             "first_residual": r1, "dp_dt": dpdt, "second_residual": r2}
        )
    return {
        "packet": {"m": wp.m, "sigma": wp.sigma, "x0": wp.x0, "p0": wp.p0, "hbar": wp.hbar},
        "rows": rows,
        "max_first_residual": worst1,
        "max_second_residual": worst2,
        "passed": bool(worst1 <= tol and worst2 <= tol),
    }
