"""Canonical-form constructors, exact arithmetic, and calculus helpers."""

from fractions import Fraction

import pytest

from deltaforge.expr import (
    Brkt,
    Const,
    DeltaDeriv,
    HBAR,
    I,
    Integral,
    MalformedExpr,
    ONE,
    PI,
    Pow,
    Prod,
    Sum,
    UndefinedProduct,
    ZERO,
    conjugate,
    const,
    differentiate,
    free_vars,
    infer_kind,
    is_formally_real,
    make_exp,
    make_pow,
    make_prod,
    make_sum,
    node_count,
    normalize,
    substitute,
    sym,
    total_delta_order,
)

x = sym("x")
xp = sym("x'")
p = sym("p")
a = sym("a")


def test_kind_inference():
    assert infer_kind("x") == "coordinate"
    assert infer_kind("x'") == "coordinate"
    assert infer_kind("p'") == "momentum"
    assert infer_kind("a") == "parameter"
    assert sym("q").kind == "momentum"


def test_const_exact_arithmetic():
    c = const(Fraction(1, 3), Fraction(-2))
    d = const(Fraction(2, 3), Fraction(2))
    assert make_sum([c, d]) == ONE
    assert make_prod([I, I]) == const(-1)
    assert make_prod([const(Fraction(1, 2)), const(4)]) == const(2)


def test_sum_collects_like_terms():
    assert make_sum([x, x]) == make_prod([const(2), x])
    assert make_sum([x, make_prod([const(-1), x])] ) == ZERO
    e = make_sum([x, p, x, const(1), const(-1)])
    assert e == make_sum([make_prod([const(2), x]), p])


def test_sum_order_is_deterministic():
    e1 = make_sum([p, x, const(3)])
    e2 = make_sum([const(3), x, p])
    assert e1 == e2
    assert isinstance(e1, Sum)


def test_prod_merges_powers():
    assert make_prod([x, x]) == make_pow(x, Fraction(2))
    assert make_prod([x, make_pow(x, Fraction(-1))]) == ONE
    assert make_prod([x, ZERO, p]) == ZERO


def test_prod_expands_sums():
    e = make_prod([make_sum([x, const(1)]), make_sum([x, const(-1)])])
    assert e == make_sum([make_pow(x, Fraction(2)), const(-1)])


@pytest.mark.parametrize(
    "base,q,expected",
    [
        (const(4), Fraction(1, 2), const(2)),
        (const(8), Fraction(2, 3), const(4)),
        (const(2), Fraction(-1), const(Fraction(1, 2))),
        (x, Fraction(0), ONE),
        (x, Fraction(1), x),
    ],
)
def test_pow_exact_roots(base, q, expected):
    assert make_pow(base, q) == expected


def test_pow_fractional_rational_base_splits():
    # (1/2)^(1/2) and 2^(-1/2) must share one canonical spelling
    lhs = make_pow(const(Fraction(1, 2)), Fraction(1, 2))
    rhs = make_pow(const(2), Fraction(-1, 2))
    assert lhs == rhs


def test_pow_of_pow_folds_for_integer_outer():
    assert make_pow(make_pow(x, Fraction(2)), Fraction(3)) == make_pow(x, Fraction(6))


def test_pow_of_delta_rejected():
    with pytest.raises(UndefinedProduct):
        make_pow(DeltaDeriv(0, x), Fraction(2))


def test_proportional_delta_product_rejected():
    d1 = DeltaDeriv(0, make_sum([x, make_prod([const(-1), xp])]))
    d2 = DeltaDeriv(1, make_sum([make_prod([const(2), x]), make_prod([const(-2), xp])]))
    with pytest.raises(UndefinedProduct):
        make_prod([d1, d2])


def test_distinct_delta_product_allowed():
    d1 = DeltaDeriv(0, x)
    d2 = DeltaDeriv(0, p)
    e = make_prod([d1, d2])
    assert isinstance(e, Prod)
    assert total_delta_order(e) == 0


def test_normalize_idempotent_on_manual_trees():
    raw = Sum((Prod((x, x)), Prod((const(1), p)), Const(Fraction(0), Fraction(0))))
    once = normalize(raw)
    assert normalize(once) == once
    assert once == make_sum([make_pow(x, Fraction(2)), p])


def test_free_vars_and_node_count():
    e = Integral(p, make_prod([p, make_exp(make_prod([I, p, x]))]))
    assert free_vars(e) == frozenset({x})
    assert node_count(e) >= 5


def test_substitute_capture_safe():
    body = Integral(p, make_prod([p, x]))
    out = substitute(body, x, make_prod([const(2), a]))
    assert out == Integral(p, make_prod([const(2), p, a]))
    # substituting the bound variable's name is a no-op inside its scope
    assert substitute(body, p, a) == body


def test_differentiate_product_and_exp():
    e = make_prod([x, make_exp(make_prod([I, p, x, make_pow(HBAR, Fraction(-1))]))])
    d = differentiate(e, x)
    expected = make_sum(
        [
            make_exp(make_prod([I, p, x, make_pow(HBAR, Fraction(-1))])),
            make_prod(
                [I, p, x, make_pow(HBAR, Fraction(-1)),
                 make_exp(make_prod([I, p, x, make_pow(HBAR, Fraction(-1))]))],
            ),
        ]
    )
    assert d == expected


def test_differentiate_power_rule():
    assert differentiate(make_pow(x, Fraction(3)), x) == make_prod([const(3), make_pow(x, Fraction(2))])
    assert differentiate(p, x) == ZERO


def test_conjugate_flips_i():
    e = make_prod([I, x])
    assert conjugate(e) == make_prod([const(0, -1), x])
    plane = make_exp(make_prod([I, p, x]))
    assert conjugate(plane) == make_exp(make_prod([const(0, -1), p, x]))
    assert is_formally_real(make_prod([conjugate(plane), plane], ))


def test_pi_and_hbar_are_formally_real_positives():
    assert is_formally_real(PI)
    assert is_formally_real(HBAR)
    assert conjugate(PI) == PI
    assert conjugate(HBAR) == HBAR


def test_bracket_arity_guard():
    from deltaforge.expr import Bra, Ket, Op

    with pytest.raises(MalformedExpr):
        Brkt(Bra("x", x), (Op("momentum"),) * 3, Ket("x", xp))
    with pytest.raises(MalformedExpr):
        Op("energy")
    with pytest.raises(MalformedExpr):
        Bra("z", x)
