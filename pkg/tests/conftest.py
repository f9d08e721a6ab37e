"""Shared helpers: a deterministic random-expression corpus and script
mutation utilities used by the engine, parser, and acceptance tests."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from deltaforge.expr import (
    Bra,
    Brkt,
    DeltaDeriv,
    Integral,
    Ket,
    Op,
    const,
    make_exp,
    make_pow,
    make_prod,
    make_sum,
    node_count,
    normalize,
    sym,
)

_COORDS = ("x", "x'", "y")
_MOMENTA = ("p", "p'", "q")
_PARAMS = ("a", "b", "c")


def _rand_const(rng: random.Random):
    num = rng.randint(-6, 6) or 1
    den = rng.choice((1, 1, 2, 3))
    if rng.random() < 0.2:
        return const(Fraction(num, den), Fraction(rng.randint(-3, 3)))
    return const(Fraction(num, den))


def _rand_sym(rng: random.Random):
    return sym(rng.choice(_COORDS + _MOMENTA + _PARAMS))


def _linear_arg(rng: random.Random):
    """Linear delta argument in one or two distinct symbols."""
    names = rng.sample(_COORDS + _MOMENTA + _PARAMS, rng.randint(1, 2))
    terms = [make_prod([const(rng.choice((-2, -1, 1, 2))), sym(n)]) for n in names]
    if rng.random() < 0.5:
        terms.append(const(Fraction(rng.randint(-3, 3))))
    return make_sum(terms)


def _rand_bracket(rng: random.Random):
    bra_basis, bra_label = rng.choice((("x", "x"), ("x", "x'"), ("p", "p"), ("p", "p'")))
    ket_basis, ket_label = rng.choice((("x", "x'"), ("p", "p'"), ("p", "p")))
    ops = tuple(Op(rng.choice(("position", "momentum"))) for _ in range(rng.randint(0, 2)))
    return Brkt(Bra(bra_basis, sym(bra_label)), ops, Ket(ket_basis, sym(ket_label)))


def random_expr(rng: random.Random, depth: int, allow_delta: bool = True):
    """A random expression inside the engine's supported fragment.

    Products carry at most one delta factor, delta arguments stay linear,
    and exponents stay small, so every draw normalizes and simplifies
    without hitting the undefined-product guard.
    """
    if depth <= 0:
        roll = rng.random()
        if roll < 0.45:
            return _rand_sym(rng)
        if roll < 0.8:
            return _rand_const(rng)
        return make_pow(_rand_sym(rng), Fraction(rng.choice((-2, -1, 1, 2, 3))))
    roll = rng.random()
    if roll < 0.30:
        k = rng.randint(2, 3)
        return make_sum([random_expr(rng, depth - 1, allow_delta) for _ in range(k)])
    if roll < 0.55:
        factors = [random_expr(rng, depth - 2, allow_delta=False) for _ in range(rng.randint(2, 3))]
        if allow_delta and rng.random() < 0.4:
            factors.append(DeltaDeriv(rng.randint(0, 2), _linear_arg(rng)))
        return make_prod(factors)
    if roll < 0.65:
        return make_pow(random_expr(rng, 0), Fraction(rng.choice((-2, -1, 2, Fraction(1, 2)))))
    if roll < 0.75:
        return make_exp(make_prod([_rand_const(rng), _rand_sym(rng)]))
    if roll < 0.85 and allow_delta:
        return DeltaDeriv(rng.randint(0, 2), _linear_arg(rng))
    if roll < 0.95:
        var = sym(rng.choice(("u", "v")))
        body = make_prod([random_expr(rng, depth - 2, allow_delta), var])
        return Integral(var, body)
    return _rand_bracket(rng)


def build_corpus(count: int, seed: int = 20260823, max_depth: int = 8, max_nodes: int = 250):
    """Deterministic corpus of canonical expressions with tree depth up to
    max_depth.  Full multilinear expansion can blow up a deep draw, so draws
    whose canonical form exceeds max_nodes are redrawn (still deterministic)."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        e = normalize(random_expr(rng, rng.randint(1, max_depth)))
        if node_count(e) <= max_nodes:
            out.append(e)
    return out


@pytest.fixture(scope="session")
def corpus():
    return build_corpus(300)


def mutate_step(text: str, index: int) -> str:
    """Rewrite step `index` (1-based) of a script as `(expr) + 1`."""
    out = []
    seen = 0
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith("step "):
            seen += 1
            if seen == index:
                expr_text, _, just = stripped[5:].rpartition(" by ")
                line = f"step ({expr_text}) + 1 by {just}"
        out.append(line)
    if seen < index:
        raise ValueError(f"script has only {seen} steps")
    return "\n".join(out)


def step_justifications(text: str) -> list[str]:
    """The `by` token of every step line, in order."""
    out = []
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith("step "):
            out.append(stripped.rpartition(" by ")[2].split("(")[0].strip())
    return out
