"""Bracket evaluation, completeness insertion, and the script checker."""

import pytest

from deltaforge.dirac import (
    DiracError,
    dirac_reduce,
    insert_identity,
    matrix_element,
    nd_reduce,
    nt_reduce,
    reduce_brackets,
    verify_script,
)
from deltaforge.expr import Exp, Prod, ONE, conjugate, make_prod, normalize, sym
from deltaforge.parser import parse_expr, parse_script, print_expr
from deltaforge.rewrite import simplify
from deltaforge.scripts import load_script_text, script_names

from conftest import mutate_step

P = parse_expr


def nd(text: str):
    return nd_reduce(P(text))


# ---------------------------------------------------------------------------
# bracket values


@pytest.mark.parametrize(
    "bracket, expected",
    [
        ("<x|x'>", "delta(x - x')"),
        ("<p|p'>", "delta(p - p')"),
        ("<x|p>", "2^(-1/2)*pi^(-1/2)*hbar^(-1/2)*exp(I*p*x*hbar^(-1))"),
        ("<p|x>", "2^(-1/2)*pi^(-1/2)*hbar^(-1/2)*exp(-I*p*x*hbar^(-1))"),
    ],
)
def test_bare_bracket_values(bracket, expected):
    assert print_expr(reduce_brackets(P(bracket))) == expected


def test_plane_wave_amplitude_squared():
    """|<x|p>|^2 is the constant 1/(2*pi*hbar): no position dependence."""
    w = nd("<x|p>")
    sq, _ = simplify(make_prod([conjugate(w), w]))
    assert sq == P("1/(2*pi*hbar)")


def test_cross_basis_hermiticity():
    assert nd("<p|x>") == normalize(conjugate(nd("<x|p>")))


def test_time_phase_is_unitary():
    # The evolving-state overlap carries exp(I*t*(p^2 - p'^2)/(2*m*hbar));
    # its modulus drops to 1 while the orthonormality delta stays put.
    out = reduce_brackets(P("<t,p|p',t>"))
    assert isinstance(out, Prod)
    phases = [f for f in out.factors if isinstance(f, Exp)]
    assert len(phases) == 1
    mod2, _ = simplify(make_prod([conjugate(phases[0]), phases[0]]))
    assert mod2 == ONE
    assert P("delta(p - p')") in out.factors


@pytest.mark.parametrize(
    "which, basis, labels, expected",
    [
        ("momentum", "x", ("x", "x'"), "I*hbar*ddelta(x' - x, 1)"),
        ("position", "p", ("p", "p'"), "-I*hbar*ddelta(p' - p, 1)"),
        ("position", "x", ("x", "x'"), "x*delta(x' - x)"),
        ("momentum", "p", ("p", "p'"), "p*delta(p' - p)"),
    ],
)
def test_matrix_element_closed_forms(which, basis, labels, expected):
    got = matrix_element(which, basis, (sym(labels[0]), sym(labels[1])))
    assert got == P(expected)


# ---------------------------------------------------------------------------
# completeness insertion


def test_insert_identity_structure():
    out = insert_identity(P("<x|x'>"), "p")
    assert out == P("int(p, <x|p>*<p|x'>)")


def test_insert_identity_splits_before_ket():
    # Sandwiched operators stay with the bra side of the split.
    out = insert_identity(P("<x|X|x'>"), "p")
    assert out == P("int(p, <x|X|p>*<p|x'>)")


def test_insert_identity_avoids_used_names():
    # p is taken by the outer factor; the next name in the series is p1.
    out = insert_identity(P("p * <x|x'>"), "p")
    assert out == P("p * int(p1, <x|p1>*<p1|x'>)")


def test_insert_identity_errors():
    with pytest.raises(DiracError):
        insert_identity(P("x + 1"), "p")
    with pytest.raises(DiracError):
        insert_identity(P("<x|x'>"), "q")


def test_dirac_reduce_resolves_cross_basis_elements():
    # <x|P|x'> needs a momentum-basis insertion before either end matches.
    out, _ = simplify(dirac_reduce(P("<x|P|x'>")))
    assert out == P("I*hbar*ddelta(x' - x, 1)")


# ---------------------------------------------------------------------------
# commutator, reduced by the engine alone


def test_commutator_position_basis():
    got = nd("<x|P X|x'> - <x|X P|x'>")
    want, _ = simplify(P("-(I*hbar)*delta(x - x')"))
    assert got == want


def test_commutator_momentum_basis():
    got = nd("<p|P X|p'> - <p|X P|p'>")
    want, _ = simplify(P("-(I*hbar)*delta(p - p')"))
    assert got == want


def test_moment_theorems_agree():
    """The two certified time-derivative identities are engine theorems too:
    the first-moment difference vanishes, and the second is its derivative."""
    assert nt_reduce(P("m * d(t, <t,p|X|p',t>) - <t,p|P|p',t>")) == P("0")
    lhs = nt_reduce(P("d(t, m * d(t, <t,p|X|p',t>))"))
    rhs = nt_reduce(P("d(t, <t,p|P|p',t>)"))
    assert lhs == rhs == P("0")


# ---------------------------------------------------------------------------
# script verification


_STEP_COUNTS = {"commutator": 8, "ehrenfest1": 8, "ehrenfest2": 7, "eigenfunction": 11}


def test_bundled_script_inventory():
    assert script_names() == sorted(_STEP_COUNTS)


@pytest.mark.parametrize("name", sorted(_STEP_COUNTS))
def test_bundled_scripts_verify(name):
    rep = verify_script(parse_script(load_script_text(name), name=name))
    assert rep.verified
    assert rep.status == "verified"
    assert rep.failed_step is None and rep.reason is None
    assert rep.steps_checked == _STEP_COUNTS[name]
    assert len(rep.step_lines) == _STEP_COUNTS[name]
    assert all(line.endswith(": ok") for line in rep.step_lines)


def test_eigenfunction_solves_amplitude():
    rep = verify_script(parse_script(load_script_text("eigenfunction"), name="eigenfunction"))
    assert rep.derived == {"C": print_expr(normalize(P("1/sqrt(2*pi*hbar)")))}
    assert rep.derived["C"] == "2^(-1/2)*pi^(-1/2)*hbar^(-1/2)"
    assert rep.conclusion == (
        "<x|p>",
        "2^(-1/2)*pi^(-1/2)*hbar^(-1/2)*exp(I*p*x*hbar^(-1))",
    )


def test_failing_script_report():
    text = "step x*ddelta(x, 1) by start\nstep delta(x) by rule(scale-deriv)"
    rep = verify_script(parse_script(text, name="bad"))
    assert not rep.verified
    assert rep.status == "failed"
    assert rep.failed_step == 2
    assert "scale-deriv" in rep.reason
    assert rep.step_lines[-1].endswith("FAILED")
    assert "failed" in rep.to_text()


def test_report_dict_schema():
    rep = verify_script(parse_script(load_script_text("commutator"), name="commutator"))
    d = rep.to_dict()
    assert set(d) == {
        "script",
        "status",
        "steps_checked",
        "failed_step",
        "reason",
        "steps",
        "derived",
        "conclusion",
    }
    assert d["script"] == "commutator"
    assert d["steps_checked"] == 8


# A corrupted line must be caught at that line -- except for section starts,
# which assert nothing themselves; corrupting one trips the following step.
@pytest.mark.parametrize(
    "name, mutated, caught",
    [
        ("commutator", 1, 2),
        ("commutator", 5, 5),
        ("commutator", 8, 8),
        ("ehrenfest1", 4, 4),
        ("ehrenfest1", 8, 8),
        ("ehrenfest2", 1, 2),
        ("ehrenfest2", 4, 4),
        ("eigenfunction", 6, 6),
        ("eigenfunction", 7, 8),
        ("eigenfunction", 11, 11),
    ],
)
def test_mutated_step_fails_exactly_there(name, mutated, caught):
    text = mutate_step(load_script_text(name), mutated)
    rep = verify_script(parse_script(text, name=name))
    assert rep.status == "failed"
    assert rep.failed_step == caught
    assert rep.steps_checked == caught - 1
