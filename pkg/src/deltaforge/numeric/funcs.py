"""Smooth test functions for distributional pairings.

A TestFunction wraps a symbolic expression in the dummy variable u, so every
analytic derivative used as an oracle comes from the exact symbolic
differentiator rather than finite differences.  Trigonometric shapes are
complex-exponential combinations (the expression language is closed under
differentiation); evaluation takes the real part.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..expr import (
    Const,
    Exp,
    Expr,
    Pow,
    Prod,
    Sum,
    differentiate,
    eval_expr,
    normalize,
    sym,
)

U = sym("u")


@dataclass(frozen=True)
class TestFunction:
    __test__ = False  # not a pytest collection target

    name: str
    expr: Expr

    def __call__(self, u) -> np.ndarray:
        val = eval_expr(self.expr, {"u": np.asarray(u, dtype=float)})
        return np.real(np.asarray(val))

    def at(self, x: float) -> float:
        return float(np.real(eval_expr(self.expr, {"u": float(x)})))

    def derivative(self, n: int = 1) -> "TestFunction":
        e = self.expr
        for _ in range(n):
            e = differentiate(e, U)
        marks = "'" * n
        return TestFunction(f"{self.name}{marks}", e)


def _c(re, im=0) -> Const:
    return Const(Fraction(re), Fraction(im))


def _sin_expr(k: int = 1) -> Expr:
    # sin(k u) = (exp(i k u) - exp(-i k u)) / (2 i)
    iku = Prod((_c(0, k), U))
    return normalize(
        Sum(
            (
                Prod((_c(0, Fraction(-1, 2)), Exp(iku))),
                Prod((_c(0, Fraction(1, 2)), Exp(Prod((_c(-1), iku))))),
            )
        )
    )


def _cos_expr(k: int = 1) -> Expr:
    iku = Prod((_c(0, k), U))
    return normalize(
        Sum(
            (
                Prod((_c(Fraction(1, 2)), Exp(iku))),
                Prod((_c(Fraction(1, 2)), Exp(Prod((_c(-1), iku))))),
            )
        )
    )


_GAUSS = normalize(Exp(Prod((_c(-1), Pow(U, Fraction(2))))))
_HALF_GAUSS = normalize(Exp(Prod((_c(Fraction(-1, 2)), Pow(U, Fraction(2))))))

F_GAUSS = TestFunction("gauss", _GAUSS)
F_SIN = TestFunction("sin", _sin_expr())
F_COS = TestFunction("cos", _cos_expr())
F_BUMP = TestFunction(
    "bump",
    normalize(
        Prod((Sum((_c(1), U, Prod((_c(Fraction(1, 2)), Pow(U, Fraction(2)))))), _HALF_GAUSS))
    ),
)
F_WAVE = TestFunction("wave", normalize(Prod((_cos_expr(2), _HALF_GAUSS))))

STANDARD = {f.name: f for f in (F_GAUSS, F_SIN, F_COS, F_BUMP, F_WAVE)}


def random_testfunction(rng: np.random.Generator) -> TestFunction:
    """A random Schwartz-class function: low-degree rational polynomial times
    a gaussian envelope, optionally modulated by cos(k u)."""
    deg = int(rng.integers(0, 4))
    terms = [_c(int(rng.integers(-3, 4)) or 1)]
    for d in range(1, deg + 1):
        c = int(rng.integers(-3, 4))
        if c:
            terms.append(Prod((_c(c), Pow(U, Fraction(d)))))
    poly = Sum(tuple(terms)) if len(terms) > 1 else terms[0]
    factors = [poly, _HALF_GAUSS]
    if rng.random() < 0.5:
        factors.append(_cos_expr(int(rng.integers(1, 3))))
    return TestFunction(f"rand{rng.integers(10**6)}", normalize(Prod(tuple(factors))))
