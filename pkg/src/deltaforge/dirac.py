"""Bra-ket evaluation and derivation-script checking.

This module gives brackets their values (eigenvalue pull-out, orthonormality
deltas, plane-wave overlaps, completeness insertion) and layers a small proof
checker on top: a derivation script is a list of claimed expressions, each
with a justification naming how it follows from the previous line, and
verify_script replays every justification mechanically.

Canonicalization levels used by the checker:

* N0 -- structural normal form only (no bracket or delta evaluation).
* ND -- brackets evaluated, then the rewrite catalog applied exhaustively.
* NT -- like ND, with time-derivative nodes executed before rewriting.
* NA -- like ND after substituting all registered symbol equations
        (assumptions and solved-for values) to a fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .expr import (
    Bra,
    Brkt,
    Const,
    DeltaDeriv,
    EngineError,
    Exp,
    Expr,
    HBAR,
    I,
    Integral,
    Ket,
    KIND_COORDINATE,
    KIND_MOMENTUM,
    MINUS_ONE,
    ONE,
    Op,
    PI,
    Pow,
    Prod,
    Sum,
    Sym,
    TimeDeriv,
    TWO,
    all_symbols,
    conjugate,
    contains_bracket,
    contains_delta,
    differentiate,
    free_vars,
    infer_kind,
    make_exp,
    make_pow,
    make_prod,
    make_sum,
    make_timederiv,
    normalize,
    substitute,
    sym,
)
from .parser import Assumption, Script, print_expr
from .rewrite import _positions, apply_rule, simplify

__all__ = [
    "CheckReport",
    "DiracError",
    "dirac_reduce",
    "insert_identity",
    "matrix_element",
    "nd_reduce",
    "nt_reduce",
    "reduce_brackets",
    "verify_script",
]


class DiracError(EngineError):
    pass


def _op_basis(o: Op) -> str:
    return "x" if o.which == "position" else "p"


def _plane_norm() -> Expr:
    return make_pow(make_prod([TWO, PI, HBAR]), Fraction(-1, 2))


def _pair_value(bra: Bra, ket: Ket) -> Expr:
    """Value of a bare operator-free bracket."""
    if bra.basis == ket.basis:
        return normalize(
            DeltaDeriv(0, make_sum([bra.label, make_prod([MINUS_ONE, ket.label])]))
        )
    if bra.basis == "x":
        arg = make_prod([I, ket.label, bra.label, make_pow(HBAR, Fraction(-1))])
    else:
        arg = make_prod([MINUS_ONE, I, bra.label, ket.label, make_pow(HBAR, Fraction(-1))])
    return normalize(make_prod([_plane_norm(), make_exp(arg)]))


def _eval_brkt(b: Brkt) -> Expr:
    parts: list[Expr] = []
    changed = False
    if b.bra.phase != ONE or b.ket.phase != ONE:
        parts.extend([b.bra.phase, b.ket.phase])
        changed = True
    bra = Bra(b.bra.basis, b.bra.label)
    ket = Ket(b.ket.basis, b.ket.label)
    ops = list(b.ops)
    while ops:
        if _op_basis(ops[-1]) == ket.basis:
            parts.append(ket.label)
            ops.pop()
            changed = True
        elif _op_basis(ops[0]) == bra.basis:
            parts.append(bra.label)
            ops.pop(0)
            changed = True
        else:
            break
    if ops:
        if not changed:
            return b
        return make_prod(parts + [Brkt(bra, tuple(ops), ket)])
    return make_prod(parts + [_pair_value(bra, ket)])


def _map_brackets(e: Expr, fn) -> Expr:
    """Rebuild e with fn applied at every bracket node."""
    if isinstance(e, Brkt):
        return fn(e)
    if isinstance(e, Sum):
        return make_sum([_map_brackets(t, fn) for t in e.terms])
    if isinstance(e, Prod):
        return make_prod([_map_brackets(f, fn) for f in e.factors])
    if isinstance(e, Pow):
        return make_pow(_map_brackets(e.base, fn), e.exp)
    if isinstance(e, Exp):
        return make_exp(_map_brackets(e.arg, fn))
    if isinstance(e, DeltaDeriv):
        return normalize(DeltaDeriv(e.order, _map_brackets(e.arg, fn)))
    if isinstance(e, Integral):
        return normalize(Integral(e.var, _map_brackets(e.body, fn)))
    if isinstance(e, TimeDeriv):
        return make_timederiv(e.order, _map_brackets(e.arg, fn), e.var)
    return e


def reduce_brackets(e: Expr) -> Expr:
    """One pass of bracket evaluation: phase extraction, eigenvalue pull-out
    from either end, orthonormality deltas and plane-wave overlaps."""
    return normalize(_map_brackets(normalize(e), _eval_brkt))


def _stuck_brackets(e: Expr) -> list[Brkt]:
    found: list[Brkt] = []

    def peek(b: Brkt) -> Expr:
        if b.ops:
            found.append(b)
        return b

    _map_brackets(normalize(e), peek)
    return found


_FRESH_LIMIT = 10


def insert_identity(e: Expr, basis: str, *, only_ops: bool = False) -> Expr:
    """Insert a completeness integral (resolution of the identity) in the
    given basis into every bracket of e.

    Fresh integration symbols come from the series p, p1, p2, ... (momentum)
    or x, x1, x2, ... (position): the first names not appearing anywhere in
    e, with identical bracket subtrees receiving the same symbol.  The
    integral splits the bracket just before the ket, so any sandwiched
    operators stay with the bra side.
    """
    if basis not in ("x", "p"):
        raise DiracError(f"unknown basis {basis!r}")
    e = normalize(e)
    used = {s.name for s in all_symbols(e)} | {"pi", "hbar"}
    names: dict[Brkt, Sym] = {}
    counter = [0]

    def fresh_sym() -> Sym:
        while counter[0] <= _FRESH_LIMIT:
            nm = basis if counter[0] == 0 else f"{basis}{counter[0]}"
            counter[0] += 1
            if nm not in used:
                used.add(nm)
                return sym(nm)
        raise DiracError("ran out of fresh completeness symbols")

    hit = [False]

    def ins(b: Brkt) -> Expr:
        if only_ops and not b.ops:
            return b
        hit[0] = True
        if b not in names:
            names[b] = fresh_sym()
        v = names[b]
        left = Brkt(b.bra, b.ops, Ket(basis, v))
        right = Brkt(Bra(basis, v), (), b.ket)
        return Integral(v, make_prod([left, right]))

    out = normalize(_map_brackets(e, ins))
    if not hit[0]:
        raise DiracError("no bracket to insert a completeness integral into")
    return out


def dirac_reduce(e: Expr, max_rounds: int = 10) -> Expr:
    """Evaluate every bracket, inserting completeness integrals in the basis
    of the pending operator whenever neither end matches it."""
    cur = normalize(e)
    for _ in range(max_rounds):
        nxt = reduce_brackets(cur)
        if nxt == cur:
            stuck = _stuck_brackets(nxt)
            if not stuck:
                return nxt
            nxt = insert_identity(nxt, _op_basis(stuck[0].ops[-1]), only_ops=True)
        cur = nxt
    if _stuck_brackets(cur):
        raise DiracError("bracket reduction did not converge")
    return cur


def matrix_element(which: str, basis: str, labels: tuple[Sym, Sym]) -> Expr:
    """Closed form of <a| O |b> for one operator between same-basis states."""
    a, b = labels
    br = Brkt(Bra(basis, a), (Op(which),), Ket(basis, b))
    out, _ = simplify(dirac_reduce(br))
    return out


def _eval_timederivs(e: Expr) -> Expr:
    if isinstance(e, TimeDeriv):
        inner = _eval_timederivs(e.arg)
        for _ in range(e.order):
            inner = differentiate(inner, e.var)
        return inner
    if isinstance(e, Sum):
        return make_sum([_eval_timederivs(t) for t in e.terms])
    if isinstance(e, Prod):
        return make_prod([_eval_timederivs(f) for f in e.factors])
    if isinstance(e, Pow):
        return make_pow(_eval_timederivs(e.base), e.exp)
    if isinstance(e, Exp):
        return make_exp(_eval_timederivs(e.arg))
    if isinstance(e, DeltaDeriv):
        return normalize(DeltaDeriv(e.order, _eval_timederivs(e.arg)))
    if isinstance(e, Integral):
        return normalize(Integral(e.var, _eval_timederivs(e.body)))
    return e


def nd_reduce(e: Expr) -> Expr:
    """Canonical form with brackets evaluated and the rule catalog applied."""
    out, _ = simplify(dirac_reduce(e))
    return out


def nt_reduce(e: Expr) -> Expr:
    """Like nd_reduce, but time-derivative nodes are executed first."""
    out, _ = simplify(normalize(_eval_timederivs(dirac_reduce(e))))
    return out


# ---------------------------------------------------------------------------
# script verification


@dataclass
class CheckReport:
    script: str
    status: str = "verified"  # or "failed"
    steps_checked: int = 0
    failed_step: Optional[int] = None
    reason: Optional[str] = None
    step_lines: list[str] = field(default_factory=list)
    derived: dict[str, str] = field(default_factory=dict)
    conclusion: Optional[tuple[str, str]] = None

    @property
    def verified(self) -> bool:
        return self.status == "verified"

    def to_dict(self) -> dict:
        return {
            "script": self.script,
            "status": self.status,
            "steps_checked": self.steps_checked,
            "failed_step": self.failed_step,
            "reason": self.reason,
            "steps": list(self.step_lines),
            "derived": dict(self.derived),
            "conclusion": list(self.conclusion) if self.conclusion else None,
        }

    def to_text(self) -> str:
        lines = [f"script {self.script}: {self.status}"]
        lines.extend(f"  {s}" for s in self.step_lines)
        for nm, val in self.derived.items():
            lines.append(f"  solved {nm} = {val}")
        if self.conclusion:
            lines.append(f"  conclusion: {self.conclusion[0]}  ==  {self.conclusion[1]}")
        if self.reason:
            lines.append(f"  reason: {self.reason}")
        return "\n".join(lines)


def _subst_many(e: Expr, mapping: dict[Sym, Expr]) -> Expr:
    """Simultaneous substitution via temporaries (safe for swaps)."""
    tmp: dict[Sym, Sym] = {}
    for i, s in enumerate(mapping):
        tmp[s] = Sym(f"subst_tmp{i}", s.kind)
    out = e
    for s, t in tmp.items():
        out = substitute(out, s, t)
    for s, t in tmp.items():
        out = substitute(out, t, mapping[s])
    return out


def _subst_fixpoint(e: Expr, eqs: list[tuple[Sym, Expr]]) -> Expr:
    cur = normalize(e)
    for _ in range(len(eqs) + 2):
        nxt = cur
        for s, r in eqs:
            nxt = substitute(nxt, s, r)
        if nxt == cur:
            return cur
        cur = nxt
    raise DiracError("assumption substitution did not reach a fixed point")


class _Context:
    def __init__(self, script: Script):
        self.script = script
        self.assumptions: dict[str, Assumption] = {}
        for a in script.assumptions:
            if not isinstance(a.lhs, (Sym, Brkt)):
                raise DiracError(
                    f"assumption {a.name!r} must define a symbol or a bracket"
                )
            if isinstance(a.lhs, Brkt) and a.lhs.ops:
                raise DiracError(
                    f"assumption {a.name!r}: bracket form must be operator-free"
                )
            self.assumptions[a.name] = a
        self.derived: dict[str, tuple[Sym, Expr]] = {}

    def sym_equations(self) -> list[tuple[Sym, Expr]]:
        eqs = [
            (a.lhs, a.rhs)
            for a in self.assumptions.values()
            if isinstance(a.lhs, Sym)
        ]
        eqs.extend(self.derived.values())
        return eqs

    def na(self, e: Expr) -> Expr:
        return nd_reduce(_subst_fixpoint(e, self.sym_equations()))

    def nat(self, e: Expr) -> Expr:
        return nt_reduce(_subst_fixpoint(e, self.sym_equations()))


def _apply_bracket_schema(e: Expr, lhs: Brkt, rhs_full: Expr) -> Expr:
    bl, kl = lhs.bra.label, lhs.ket.label

    def app(b: Brkt) -> Expr:
        if b.ops or b.bra.phase != ONE or b.ket.phase != ONE:
            return b
        if b.bra.basis == lhs.bra.basis and b.ket.basis == lhs.ket.basis:
            return _subst_many(rhs_full, {bl: b.bra.label, kl: b.ket.label})
        if b.bra.basis == lhs.ket.basis and b.ket.basis == lhs.bra.basis:
            return _subst_many(conjugate(rhs_full), {bl: b.ket.label, kl: b.bra.label})
        return b

    return normalize(_map_brackets(normalize(e), app))


def _strip_deltas(e: Expr) -> tuple[tuple[Expr, ...], Expr]:
    if isinstance(e, DeltaDeriv):
        return (e,), ONE
    if isinstance(e, Prod):
        deltas = tuple(f for f in e.factors if isinstance(f, DeltaDeriv))
        rest = [f for f in e.factors if not isinstance(f, DeltaDeriv)]
        return deltas, make_prod(rest) if rest else ONE
    return (), e


def _sym_powers(e: Expr, s: Sym) -> tuple[Fraction, Expr]:
    """Split e = s^k * rest with rest free of s."""
    factors = e.factors if isinstance(e, Prod) else (e,)
    k = Fraction(0)
    rest: list[Expr] = []
    for f in factors:
        if f == s:
            k += 1
        elif isinstance(f, Pow) and f.base == s:
            k += f.exp
        elif s in free_vars(f):
            raise DiracError(f"cannot isolate {s.name}: it appears non-multiplicatively")
        else:
            rest.append(f)
    return k, make_prod(rest) if rest else ONE


def _check_rule_step(prev: Expr, claimed: Expr, rule_id: str) -> Optional[str]:
    base = normalize(prev)
    want = normalize(claimed)
    for path in _positions(base, "innermost"):
        try:
            got = apply_rule(base, rule_id, path)
        except EngineError:
            continue
        if normalize(got) == want:
            return None
    return f"no position where rule {rule_id!r} rewrites the line into the claim"


def _single_identity_bracket(e: Expr) -> Optional[Brkt]:
    found: list[Brkt] = []

    def peek(b: Brkt) -> Expr:
        found.append(b)
        return b

    _map_brackets(normalize(e), peek)
    if len(found) != 1:
        return None
    b = found[0]
    if b.ops or b.bra.basis != b.ket.basis:
        return None
    return b


def verify_script(script: Script) -> CheckReport:
    """Mechanically replay every justification in a derivation script."""
    ctx = _Context(script)
    rep = CheckReport(script=script.name)
    prev: Optional[Expr] = None
    section_start: Optional[Expr] = None

    for i, st in enumerate(script.steps, start=1):
        jname = st.just.name
        args = st.just.args
        try:
            reason = _check_step(ctx, prev, st.expr, jname, args)
        except EngineError as ex:
            reason = f"{type(ex).__name__}: {ex}"
        if reason is not None:
            rep.status = "failed"
            rep.failed_step = i
            rep.reason = f"step {i} ({st.just}): {reason}"
            rep.step_lines.append(f"step {i} {st.just}: FAILED")
            return rep
        rep.steps_checked += 1
        rep.step_lines.append(f"step {i} {st.just}: ok")
        if jname == "start":
            section_start = st.expr
        if jname == "solve":
            s, v = ctx.derived[args[0]]
            rep.derived[s.name] = print_expr(v)
        prev = st.expr

    if section_start is not None and prev is not None:
        rep.conclusion = (print_expr(normalize(section_start)), print_expr(normalize(prev)))
    return rep


def _check_step(
    ctx: _Context, prev: Optional[Expr], claimed: Expr, jname: str, args: tuple[str, ...]
) -> Optional[str]:
    """Return None if the step checks out, else a failure reason."""
    if jname == "start":
        return None
    if prev is None:
        return "no previous line"

    if jname == "rule":
        return _check_rule_step(prev, claimed, args[0])

    if jname == "axiom":
        name = args[0]
        if name in ctx.assumptions:
            a = ctx.assumptions[name]
            rhs_full = _subst_fixpoint(a.rhs, ctx.sym_equations())
            if isinstance(a.lhs, Sym):
                cand = substitute(normalize(prev), a.lhs, rhs_full)
            else:
                cand = _apply_bracket_schema(prev, a.lhs, rhs_full)
        elif name in ctx.derived:
            s, v = ctx.derived[name]
            cand = substitute(normalize(prev), s, v)
        else:
            return f"unknown assumption {name!r}"
        if ctx.na(cand) != ctx.na(claimed):
            return f"applying {name!r} does not yield the claim"
        return None

    if jname == "insert-identity":
        kind = infer_kind(args[0])
        basis = {KIND_COORDINATE: "x", KIND_MOMENTUM: "p"}.get(kind)
        if basis is None:
            return f"{args[0]!r} does not name a completeness basis"
        cand = insert_identity(normalize(prev), basis)
        if cand != normalize(claimed):
            return "inserted-identity form does not match the claim"
        return None

    if jname in ("inner-product", "equivalence"):
        if ctx.na(prev) != ctx.na(claimed):
            return "the two lines do not reduce to the same canonical form"
        return None

    if jname == "differentiate":
        if ctx.nat(prev) != ctx.nat(claimed):
            return "time-derivative evaluation does not connect the lines"
        return None

    if jname == "completeness":
        b = _single_identity_bracket(prev)
        if b is None:
            return "line must contain exactly one operator-free same-basis bracket"
        if contains_bracket(claimed) or contains_delta(claimed):
            return "the extracted coefficient must be bracket- and delta-free"
        labels = {b.bra.label, b.ket.label}
        if labels & free_vars(claimed):
            return "the extracted coefficient must not depend on the state labels"
        delta = DeltaDeriv(
            0, make_sum([b.bra.label, make_prod([MINUS_ONE, b.ket.label])])
        )
        if ctx.na(prev) != ctx.na(make_prod([claimed, delta])):
            return "coefficient times the identity delta does not match the line"
        return None

    if jname == "solve":
        s = sym(args[0])
        if s in free_vars(claimed):
            return f"claim still contains {s.name}"
        nprev = ctx.na(prev)
        nclaim = ctx.na(claimed)
        dp, rp = _strip_deltas(nprev)
        dc, rc = _strip_deltas(nclaim)
        if dp != dc:
            return "both sides must carry the same delta content"
        k, rest = _sym_powers(rp, s)
        if k == 0:
            return f"{s.name} does not occur in the line"
        if s in free_vars(rc) or s in free_vars(rest):
            return f"{s.name} must occur only as an overall power"
        try:
            ratio = normalize(make_prod([rc, make_pow(rest, Fraction(-1))]))
            value = normalize(make_pow(ratio, Fraction(1) / k))
        except EngineError as ex:
            return f"cannot solve: {ex}"
        ctx.derived[s.name] = (s, value)
        if ctx.na(prev) != ctx.na(claimed):
            del ctx.derived[s.name]
            return "solved value does not make the line equal to the claim"
        return None

    return f"unknown justification {jname!r}"
