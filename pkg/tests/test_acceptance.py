"""End-to-end checks of every headline guarantee, one line of verdict each.

Run `pytest -s tests/test_acceptance.py` to see the lines; each test prints

    [acceptance] <tag>: PASS|FAIL (<measured detail>)

and fails the usual way if the guarantee does not hold.
"""

import math

from deltaforge.dirac import nd_reduce, verify_script
from deltaforge.expr import normalize
from deltaforge.numeric import (
    Wavepacket,
    check_rule,
    diffraction_magnitude,
    ehrenfest_check,
    fourier_kernel_check,
)
from deltaforge.parser import parse_expr, parse_script, print_expr
from deltaforge.rewrite import simplify
from deltaforge.scripts import load_script_text

from conftest import build_corpus, mutate_step, step_justifications

P = parse_expr


def _line(tag: str, ok: bool, detail: str) -> None:
    print(f"[acceptance] {tag}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{tag}: {detail}"


def _verify(name: str):
    return verify_script(parse_script(load_script_text(name), name=name))


def test_rule_convergence_certificates():
    """The four load-bearing delta identities hold numerically: residuals
    shrink at least first order in epsilon and end below 1e-4 of scale."""
    bits = []
    ok = True
    for rid in ("scale-deriv", "parity-n", "fourier-moment", "sample-at-point"):
        rep = check_rule(rid, family="gaussian", sweep=(1e-1, 1e-2, 1e-3))
        ok = ok and rep.passed and rep.order >= 1.0
        bits.append(f"{rid} o={rep.order:.2f} r={rep.rows[-1]['residual']:.1e}")
    _line("rule-convergence", ok, "; ".join(bits))


def test_plane_wave_normalization_derived():
    rep = _verify("eigenfunction")
    want_c = normalize(P("1/sqrt(2*pi*hbar)"))
    want_conc = print_expr(normalize(P("exp(I*p*x/hbar)/sqrt(2*pi*hbar)")))
    ok = (
        rep.verified
        and P(rep.derived["C"]) == want_c
        and rep.conclusion == ("<x|p>", want_conc)
    )
    _line("plane-wave-normalization", ok, f"C = {rep.derived.get('C')}")


def test_commutator_certified_and_rederived():
    rep = _verify("commutator")
    in_x = nd_reduce(P("<x|P X|x'> - <x|X P|x'>")) == simplify(P("-(I*hbar)*delta(x - x')"))[0]
    in_p = nd_reduce(P("<p|P X|p'> - <p|X P|p'>")) == simplify(P("-(I*hbar)*delta(p - p')"))[0]
    ok = rep.verified and in_x and in_p
    _line(
        "commutator",
        ok,
        f"script {rep.steps_checked} steps; x-basis {in_x}, p-basis {in_p}",
    )


def test_moment_theorem_scripts_verify():
    r1, r2 = _verify("ehrenfest1"), _verify("ehrenfest2")
    ok = r1.verified and r2.verified
    _line(
        "moment-theorems",
        ok,
        f"first: {r1.status} ({r1.steps_checked} steps); "
        f"second: {r2.status} ({r2.steps_checked} steps)",
    )


def test_wavepacket_moment_rates():
    """On an exact spreading packet (sigma=1, p0=2, m=1, hbar=1) the measured
    d<x>/dt stays at 2 and d2<x>/dt2 at 0, to 1e-6, across t in [0, 2]."""
    wp = Wavepacket(m=1.0, sigma=1.0, x0=0.0, p0=2.0, hbar=1.0)
    out = ehrenfest_check(wp, times=(0.0, 0.5, 1.0, 1.5, 2.0), tol=1e-6)
    ok = out["passed"] and out["max_first_residual"] <= 1e-6 and out["max_second_residual"] <= 1e-6
    _line(
        "wavepacket-rates",
        ok,
        f"max|d<x>/dt - 2| = {out['max_first_residual']:.2e}, "
        f"max|d2<x>/dt2| = {out['max_second_residual']:.2e}",
    )


def test_stationary_phase_magnitude():
    bits = []
    ok = True
    for alpha, beta in ((0.0, 1.0), (1.0, 0.5), (3.0, 2.0)):
        out = diffraction_magnitude(alpha, beta)
        rel = abs(out["estimate"] - math.sqrt(math.pi / beta)) / math.sqrt(math.pi / beta)
        ok = ok and out["passed"] and rel <= 1e-3
        bits.append(f"({alpha:g},{beta:g}) rel={rel:.1e}")
    _line("stationary-phase", ok, "; ".join(bits))


def test_truncated_completeness_kernel():
    bits = []
    ok = True
    for hbar in (1.0, 0.7):
        rep = fourier_kernel_check(hbar=hbar)
        last = rep.rows[-1]
        ok = ok and rep.passed and last["cutoff"] == 100.0 and last["residual"] <= 1e-3
        bits.append(f"hbar={hbar:g} r={last['residual']:.1e}")
    _line("truncated-completeness", ok, "; ".join(bits) + " at cutoff 100")


def test_fuzz_roundtrip_termination_mutation():
    """1000 random expressions survive print/parse and bounded rewriting, and
    corrupting any single line of any bundled derivation is caught at the
    first line whose justification can see the corruption."""
    corpus = build_corpus(1000)
    bad_roundtrip = sum(1 for e in corpus if P(print_expr(e)) != e)
    bad_budget = 0
    for e in corpus:
        try:
            simplify(e)
        except Exception:
            bad_budget += 1

    bad_mutations = []
    for name in ("commutator", "ehrenfest1", "ehrenfest2", "eigenfunction"):
        text = load_script_text(name)
        justs = step_justifications(text)
        for i in range(1, len(justs) + 1):
            # A corrupted start line asserts nothing itself; the step after
            # it is the first that can notice.
            expected = i + 1 if justs[i - 1] == "start" else i
            rep = verify_script(parse_script(mutate_step(text, i), name=name))
            if rep.status != "failed" or rep.failed_step != expected:
                bad_mutations.append((name, i, rep.failed_step))

    ok = bad_roundtrip == 0 and bad_budget == 0 and not bad_mutations
    _line(
        "fuzz-and-mutation",
        ok,
        f"{len(corpus)} exprs: {bad_roundtrip} round-trip, {bad_budget} budget; "
        f"mutations misplaced: {bad_mutations or 0}",
    )
