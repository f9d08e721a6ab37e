"""Rule catalog, the terminating simplifier, traces, and numeric soundness."""

import numpy as np
import pytest

from deltaforge import (
    CATALOG,
    NoMatch,
    RuleNotFound,
    apply_rule,
    equivalent,
    parse_expr,
    print_expr,
    simplify,
)
from deltaforge.expr import node_count, normalize, total_delta_order
from deltaforge.numeric import REGULARIZABLE, check_rule, random_rule_params


def S(text):
    return simplify(parse_expr(text))[0]


def P(text):
    return normalize(parse_expr(text))


# --- individual rules ------------------------------------------------------


def test_apply_scale_deriv_at_root():
    out = apply_rule(P("x*ddelta(x, 1)"), "scale-deriv", ())
    assert out == P("-delta(x)")


def test_apply_sample_at_point():
    out = simplify(apply_rule(P("x*delta(x - a)"), "sample-at-point", ()))[0]
    assert out == S("a*delta(x - a)")


def test_apply_parity():
    out = apply_rule(P("ddelta(a - x, 1)"), "parity-n", ())
    assert out == P("-ddelta(x - a, 1)")


def test_apply_rule_no_match():
    with pytest.raises(NoMatch):
        apply_rule(P("x"), "scale-deriv", ())
    with pytest.raises(RuleNotFound):
        apply_rule(P("x"), "nonexistent", ())


@pytest.mark.parametrize(
    "before,after",
    [
        ("x*ddelta(x, 1)", "-delta(x)"),
        ("x^2*ddelta(x, 1)", "0"),
        ("x^2*ddelta(x, 2)", "2*delta(x)"),
        ("delta(2*x)", "1/2*delta(x)"),
        ("ddelta(3*x, 1)", "1/9*ddelta(x, 1)"),
        ("delta(-x)", "delta(x)"),
        ("ddelta(-x, 1)", "-ddelta(x, 1)"),
        ("int(u, delta(u - a)*exp(u))", "exp(a)"),
        ("int(u, ddelta(u - a, 1)*u^2)", "-2*a"),
        ("int(u, delta(a - u)*u)", "a"),
        ("int(p, x + p*delta(p))", "int(p, x) + 0"),
        ("(x' - x)*ddelta(x' - x, 1)", "-delta(x' - x)"),
    ],
)
def test_simplify_golden(before, after):
    assert S(before) == S(after)


def test_fourier_moment_chain_position():
    # momentum matrix element in the position basis
    chain = "int(p, 1/(2*pi*hbar) * p * exp(I*p*(x - x')/hbar))"
    assert S(chain) == S("I*hbar*ddelta(x' - x, 1)")


def test_fourier_moment_chain_momentum():
    chain = "int(x, 1/(2*pi*hbar) * x * exp(I*(p' - p)*x/hbar))"
    assert S(chain) == S("I*hbar*ddelta(p - p', 1)")


def test_completeness_integral_collapses():
    chain = "int(p, 1/(2*pi*hbar) * exp(I*p*(x - x')/hbar))"
    assert S(chain) == S("delta(x' - x)")


@pytest.mark.parametrize(
    "a,b,expected",
    [
        ("(x' - x)*ddelta(x' - x, 1)", "-delta(x - x')", True),
        ("delta(x - x')", "delta(x' - x)", True),
        ("delta(x)", "ddelta(x, 1)", False),
        ("x + x", "2*x", True),
    ],
)
def test_equivalent(a, b, expected):
    assert equivalent(parse_expr(a), parse_expr(b)) is expected


# --- engine-wide properties ------------------------------------------------


def test_trace_replays_and_respects_budget(corpus):
    for e in corpus:
        budget = 10 * (node_count(e) + total_delta_order(e) + 1) ** 2
        out, trace = simplify(e)
        assert len(trace) <= budget
        assert len(trace) == 0 or trace.replay_ok()
        # the result really is a fixpoint
        again, t2 = simplify(out)
        assert again == out and len(t2) == 0


def test_confluence_on_script_corpus():
    from deltaforge import parse_script, scripts
    from deltaforge.dirac import dirac_reduce
    from deltaforge.expr import contains_bracket

    for name in scripts.script_names():
        sc = parse_script(scripts.load_script_text(name), name=name)
        for stp in sc.steps:
            e = stp.expr
            if contains_bracket(e):
                e = dirac_reduce(e)
            inner, _ = simplify(e, strategy="innermost")
            outer, _ = simplify(e, strategy="outermost")
            assert inner == outer, print_expr(stp.expr)


def test_catalog_is_well_formed():
    ids = [r.id for r in CATALOG]
    assert len(ids) == len(set(ids))
    for r in CATALOG:
        assert r.weight > 0
        assert r.pattern and r.replacement and r.citation


def test_rule_soundness_random_instances():
    # ~50 random instantiations across the regularizable catalog, each
    # cross-checked against the quadrature oracle
    rng = np.random.default_rng(987)
    runs = 0
    for rule_id in REGULARIZABLE:
        for _ in range(8):
            params = random_rule_params(rule_id, rng)
            rep = check_rule(rule_id, "gaussian", **params)
            assert rep.passed, (rule_id, params, rep.to_text())
            runs += 1
    assert runs == 48
