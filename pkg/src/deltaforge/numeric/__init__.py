"""Numerical oracle layer: nascent-delta kernels, adaptive quadrature, and
convergence checks backing every symbolic rewrite rule."""

from .checks import (
    REGULARIZABLE,
    ConvergenceReport,
    NotRegularizable,
    check_rule,
    pair,
    random_rule_params,
)
from .funcs import STANDARD, TestFunction, random_testfunction
from .kernels import BACKEND, FAMILIES, MAX_ORDER, family_values
from .physics import (
    GridTooSmall,
    RegularizationFailure,
    Wavepacket,
    diffraction_magnitude,
    ehrenfest_check,
    fourier_kernel_check,
)
from .quadrature import QuadratureFailure, adaptive_quad

__all__ = [
    "BACKEND",
    "FAMILIES",
    "MAX_ORDER",
    "REGULARIZABLE",
    "STANDARD",
    "ConvergenceReport",
    "GridTooSmall",
    "NotRegularizable",
    "QuadratureFailure",
    "RegularizationFailure",
    "TestFunction",
    "Wavepacket",
    "adaptive_quad",
    "check_rule",
    "diffraction_magnitude",
    "ehrenfest_check",
    "family_values",
    "fourier_kernel_check",
    "pair",
    "random_rule_params",
    "random_testfunction",
]
