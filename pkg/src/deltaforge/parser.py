"""Surface syntax: parser and canonical printer.

Expression grammar (ASCII):

    expr     = term (("+" | "-") term)*
    term     = factor (("*" | "/") factor)*
    factor   = "-" factor | power
    power    = atom ("^" exponent)?
    exponent = INT | "(" ["-"] INT ["/" INT] ")"
    atom     = NUMBER | IDENT | "hbar" | "pi" | "I"
             | "exp" "(" expr ")"       | "sqrt" "(" expr ")"
             | "delta" "(" expr ")"     | "ddelta" "(" expr "," INT ")"
             | "int" "(" IDENT "," expr ")"
             | "d" "(" IDENT "," expr ")"
             | bracket | "(" expr ")"
    bracket  = "<" part "|" (ops "|")? part ">"
    part     = IDENT | "t" "," IDENT | IDENT "," "t"
    ops      = ("P" | "X")+

Identifiers may contain apostrophes (x', p'').  Symbol kinds follow the name:
x*/y* are coordinates, p*/q* momenta, u*/v*/w* generic dummies, the rest
parameters.  P and X are reserved for the momentum and position operators and
"t,p" / "p,t" parts denote freely evolving basis states carrying their
quadratic phase.

Parsing folds literal subtrees (constant arithmetic, nested sums/products from
associativity, stacked d(t, ...) wrappers) but performs no other
normalization, so printing a normalized expression and reparsing it
reconstructs the identical tree.

Derivation scripts are line oriented:

    # comment
    assume <name>: <expr> = <expr>   # rationale
    step <expr> by <justification>

where a justification is one of start, rule(id), axiom(id),
insert-identity(basis), inner-product, equivalence, differentiate(var),
completeness, solve(symbol).
"""

from __future__ import annotations

import re
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
    HBar,
    HBAR,
    Integral,
    Ket,
    MINUS_ONE,
    MalformedExpr,
    ONE,
    Op,
    PI,
    Pow,
    Prod,
    Sum,
    Sym,
    TimeDeriv,
    make_exp,
    make_pow,
    make_prod,
    make_sum,
    normalize,
    sym,
)


@dataclass(frozen=True)
class SourceSpan:
    line: int
    start: int  # 0-based column
    end: int

    def __str__(self) -> str:
        return f"line {self.line}, columns {self.start + 1}-{self.end}"


class ParseError(EngineError):
    def __init__(self, message: str, span: SourceSpan, expected: frozenset = frozenset()):
        self.span = span
        self.expected = expected
        hint = f" (expected one of: {', '.join(sorted(expected))})" if expected else ""
        super().__init__(f"{message} at {span}{hint}")


class ScriptError(EngineError):
    def __init__(self, message: str, span: Optional[SourceSpan] = None):
        self.span = span
        super().__init__(f"{message}" + (f" at {span}" if span else ""))


RESERVED = {"exp", "sqrt", "delta", "ddelta", "int", "d", "hbar", "pi", "I", "by", "step", "assume", "P", "X"}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<ident>[A-Za-z][A-Za-z0-9_']*)|(?P<op>[-+*/^(),<>|=]))"
)


@dataclass(frozen=True)
class Tok:
    kind: str  # "num" | "ident" | one-char operator | "end"
    text: str
    span: SourceSpan


def _tokenize(text: str, line: int = 1) -> list[Tok]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            col = len(text) - len(stripped)
            raise ParseError(f"unexpected character {stripped[0]!r}", SourceSpan(line, col, col + 1))
        span = SourceSpan(line, m.start(1) if m.group("num") else m.start(m.lastgroup), m.end())
        if m.group("num"):
            out.append(Tok("num", m.group("num"), span))
        elif m.group("ident"):
            out.append(Tok("ident", m.group("ident"), span))
        else:
            out.append(Tok(m.group("op"), m.group("op"), span))
        pos = m.end()
    end = SourceSpan(line, len(text), len(text))
    out.append(Tok("end", "", end))
    return out


# ---------------------------------------------------------------------------
# structure-preserving folding used while building parse trees


def _fold_sum(parts: list[Expr]) -> Expr:
    # Sums fold through the canonical constructor (flatten, merge constants,
    # sort terms).  The printer lists positive terms before negative ones for
    # readability, so re-sorting here is what makes parse(print(e)) == e hold
    # structurally on canonical expressions.
    return make_sum(parts)


def _fold_prod(parts: list[Expr]) -> Expr:
    # Products and powers fold canonically as well, so a freshly parsed tree
    # is already a normal form (undefined delta products surface here).
    return make_prod(parts)


def _fold_pow(base: Expr, q: Fraction) -> Expr:
    return make_pow(base, q)


def _fold_timederiv(var: Sym, body: Expr) -> Expr:
    if isinstance(body, TimeDeriv) and body.var == var:
        return TimeDeriv(body.order + 1, body.arg, var)
    return TimeDeriv(1, body, var)


_T = sym("t")
_M = sym("m")


def evolution_phase(label: Sym, sign: int) -> Expr:
    """Phase exp(sign * i * label^2 * t / (2 m hbar)) of a freely evolving
    basis state; sign +1 for bras, -1 for kets."""
    return normalize(
        Exp(
            Prod(
                (
                    Const(Fraction(0), Fraction(sign)),
                    Pow(label, Fraction(2)),
                    _T,
                    Pow(Const(Fraction(2)), Fraction(-1)),
                    Pow(_M, Fraction(-1)),
                    Pow(HBAR, Fraction(-1)),
                )
            )
        )
    )


def _basis_of(label: Sym, span: SourceSpan) -> str:
    if label.kind == "coordinate":
        return "x"
    if label.kind == "momentum":
        return "p"
    raise ParseError(f"state label {label.name!r} must be a coordinate or momentum", span)


class _Parser:
    def __init__(self, toks: list[Tok]):
        self.toks = toks
        self.pos = 0

    def peek(self, ahead: int = 0) -> Tok:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Tok:
        t = self.toks[self.pos]
        if t.kind != "end":
            self.pos += 1
        return t

    def expect(self, kind: str) -> Tok:
        t = self.peek()
        if t.kind != kind:
            raise ParseError(f"unexpected {t.text or 'end of input'!r}", t.span, frozenset({kind}))
        return self.next()

    # --- grammar productions -------------------------------------------

    def expr(self) -> Expr:
        parts = [self.term()]
        while self.peek().kind in ("+", "-"):
            op = self.next()
            t = self.term()
            parts.append(t if op.kind == "+" else _fold_prod([MINUS_ONE, t]))
        return _fold_sum(parts) if len(parts) > 1 else parts[0]

    def term(self) -> Expr:
        parts = [self.factor()]
        while self.peek().kind in ("*", "/"):
            op = self.next()
            f = self.factor()
            parts.append(f if op.kind == "*" else _fold_pow(f, Fraction(-1)))
        return _fold_prod(parts) if len(parts) > 1 else parts[0]

    def factor(self) -> Expr:
        if self.peek().kind == "-":
            self.next()
            return _fold_prod([MINUS_ONE, self.factor()])
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek().kind == "^":
            self.next()
            return _fold_pow(base, self.exponent())
        return base

    def exponent(self) -> Fraction:
        t = self.peek()
        if t.kind == "num":
            self.next()
            if "." in t.text:
                raise ParseError("exponents must be integers or parenthesized rationals", t.span)
            return Fraction(int(t.text))
        if t.kind == "(":
            self.next()
            sign = 1
            if self.peek().kind == "-":
                self.next()
                sign = -1
            num = self.expect("num")
            if "." in num.text:
                raise ParseError("exponents must be rational", num.span)
            val = Fraction(sign * int(num.text))
            if self.peek().kind == "/":
                self.next()
                den = self.expect("num")
                if "." in den.text or int(den.text) == 0:
                    raise ParseError("bad exponent denominator", den.span)
                val = val / int(den.text)
            self.expect(")")
            return val
        raise ParseError("malformed exponent", t.span, frozenset({"num", "("}))

    def atom(self) -> Expr:
        t = self.peek()
        if t.kind == "num":
            self.next()
            if "." in t.text:
                return Const(Fraction(t.text), Fraction(0))
            return Const(Fraction(int(t.text)), Fraction(0))
        if t.kind == "(":
            self.next()
            inner = self.expr()
            self.expect(")")
            return inner
        if t.kind == "<":
            return self.bracket()
        if t.kind == "ident":
            return self.ident_atom()
        raise ParseError(f"unexpected {t.text or 'end of input'!r}", t.span, frozenset({"num", "ident", "(", "<"}))

    def ident_atom(self) -> Expr:
        t = self.next()
        name = t.text
        if name == "hbar":
            return HBAR
        if name == "I":
            return Const(Fraction(0), Fraction(1))
        if name == "pi":
            return PI
        if name == "exp":
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return Exp(arg)
        if name == "sqrt":
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return _fold_pow(arg, Fraction(1, 2))
        if name == "delta":
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return DeltaDeriv(0, arg)
        if name == "ddelta":
            self.expect("(")
            arg = self.expr()
            self.expect(",")
            n = self.expect("num")
            if "." in n.text:
                raise ParseError("delta derivative order must be an integer", n.span)
            self.expect(")")
            return DeltaDeriv(int(n.text), arg)
        if name == "int":
            self.expect("(")
            var = self.expect("ident")
            if var.text in RESERVED:
                raise ParseError(f"{var.text!r} cannot be an integration variable", var.span)
            self.expect(",")
            body = self.expr()
            self.expect(")")
            return Integral(sym(var.text), body)
        if name == "d":
            self.expect("(")
            var = self.expect("ident")
            if var.text in RESERVED:
                raise ParseError(f"{var.text!r} cannot be a derivative variable", var.span)
            self.expect(",")
            body = self.expr()
            self.expect(")")
            return _fold_timederiv(sym(var.text), body)
        if name in RESERVED:
            raise ParseError(f"{name!r} is reserved", t.span)
        return sym(name)

    def bracket(self) -> Expr:
        open_tok = self.expect("<")
        bra_label, bra_timed = self.state_part(open_tok)
        self.expect("|")
        ops: list[Op] = []
        # operators until a second "|" ends the sandwich; otherwise the part
        # we just read is already the ket
        if self.peek().kind == "ident" and self.peek().text in ("P", "X"):
            while self.peek().kind == "ident" and self.peek().text in ("P", "X"):
                o = self.next()
                ops.append(Op("momentum" if o.text == "P" else "position"))
            self.expect("|")
        ket_label, ket_timed = self.state_part(self.peek())
        close = self.expect(">")
        bra_basis = _basis_of(bra_label, open_tok.span)
        ket_basis = _basis_of(ket_label, close.span)
        bra_phase = evolution_phase(bra_label, +1) if bra_timed else ONE
        ket_phase = evolution_phase(ket_label, -1) if ket_timed else ONE
        return Brkt(Bra(bra_basis, bra_label, bra_phase), tuple(ops), Ket(ket_basis, ket_label, ket_phase))

    def state_part(self, at: Tok) -> tuple[Sym, bool]:
        first = self.expect("ident")
        if self.peek().kind == ",":
            self.next()
            second = self.expect("ident")
            if first.text == "t":
                return sym(second.text), True
            if second.text == "t":
                return sym(first.text), True
            raise ParseError("a time-dependent state part must name t", second.span)
        if first.text in RESERVED:
            raise ParseError(f"{first.text!r} cannot label a state", first.span)
        return sym(first.text), False


def parse_expr(text: str, line: int = 1) -> Expr:
    """Parse a single expression; raises ParseError with a source span."""
    p = _Parser(_tokenize(text, line))
    e = p.expr()
    t = p.peek()
    if t.kind != "end":
        raise ParseError(f"trailing input {t.text!r}", t.span)
    return e


# ---------------------------------------------------------------------------
# printer


def _rat_str(q: Fraction) -> str:
    return str(q) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _const_str(c: Const) -> str:
    if c.im == 0:
        return _rat_str(c.re)
    if c.re == 0:
        if c.im == 1:
            return "I"
        if c.im == -1:
            return "-I"
        return f"{_rat_str(c.im)}*I"
    im = c.im
    op = " + " if im > 0 else " - "
    imtxt = "I" if abs(im) == 1 else f"{_rat_str(abs(im))}*I"
    return f"({_rat_str(c.re)}{op}{imtxt})"


def _is_negative_const(c: Const) -> bool:
    if c.im == 0:
        return c.re < 0
    if c.re == 0:
        return c.im < 0
    return False


def _negate_const(c: Const) -> Const:
    return Const(-c.re, -c.im)


_PREC_SUM = 1
_PREC_PROD = 2
_PREC_POW = 3
_PREC_ATOM = 4


def _split_sign(e: Expr) -> tuple[bool, Expr]:
    """Return (is_negated, positive_part) for sum-term rendering."""
    if isinstance(e, Const) and _is_negative_const(e):
        return True, _negate_const(e)
    if isinstance(e, Prod) and isinstance(e.factors[0], Const) and _is_negative_const(e.factors[0]):
        c = _negate_const(e.factors[0])
        rest = e.factors[1:]
        if c.re == 1 and c.im == 0:
            return True, rest[0] if len(rest) == 1 else Prod(rest)
        return True, Prod((c,) + rest)
    return False, e


def _print(e: Expr, prec: int) -> str:
    if isinstance(e, Const):
        txt = _const_str(e)
        if txt.startswith("("):
            return txt  # mixed re/im form is already self-delimiting
        needs = txt.startswith("-") or "*" in txt or "/" in txt
        if needs and (prec >= _PREC_ATOM or (prec == _PREC_POW and txt.startswith("-"))):
            return f"({txt})"
        return txt
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, HBar):
        return "hbar"
    if isinstance(e, Sum):
        # Positive terms first for readability; folding on re-parse restores
        # the canonical stored order.
        split = [_split_sign(t) for t in e.terms]
        ordered = [s for s in split if not s[0]] + [s for s in split if s[0]]
        parts = []
        for i, (neg, body) in enumerate(ordered):
            txt = _print(body, _PREC_SUM + 1)
            if i == 0:
                parts.append(f"-{txt}" if neg else txt)
            else:
                parts.append(f" - {txt}" if neg else f" + {txt}")
        joined = "".join(parts)
        return f"({joined})" if prec > _PREC_SUM else joined
    if isinstance(e, Prod):
        neg, body = _split_sign(e)
        if neg:
            inner = _print(body, _PREC_PROD)
            txt = f"-{inner}"
            return f"({txt})" if prec > _PREC_PROD else txt
        factors = e.factors
        txt = "*".join(_print(f, _PREC_PROD + 1) for f in factors)
        return f"({txt})" if prec > _PREC_PROD else txt
    if isinstance(e, Pow):
        base = _print(e.base, _PREC_ATOM)
        q = e.exp
        if q.denominator == 1 and q >= 0:
            txt = f"{base}^{q.numerator}"
        else:
            txt = f"{base}^({_rat_str(q)})"
        # ^ is right-associative: a nested power in base position needs parens
        return f"({txt})" if prec > _PREC_POW else txt
    if isinstance(e, Exp):
        return f"exp({_print(e.arg, _PREC_SUM)})"
    if isinstance(e, DeltaDeriv):
        if e.order == 0:
            return f"delta({_print(e.arg, _PREC_SUM)})"
        return f"ddelta({_print(e.arg, _PREC_SUM)}, {e.order})"
    if isinstance(e, Integral):
        return f"int({e.var.name}, {_print(e.body, _PREC_SUM)})"
    if isinstance(e, TimeDeriv):
        inner = _print(e.arg, _PREC_SUM) if e.order == 1 else _print(TimeDeriv(e.order - 1, e.arg, e.var), _PREC_SUM)
        return f"d({e.var.name}, {inner})"
    if isinstance(e, Brkt):
        return _print_bracket(e)
    raise MalformedExpr(f"{type(e).__name__} has no standalone surface form")


def _state_part_str(label: Sym, phase: Expr, is_bra: bool) -> str:
    if phase == ONE:
        return label.name
    if phase == evolution_phase(label, +1 if is_bra else -1):
        return f"t,{label.name}" if is_bra else f"{label.name},t"
    raise MalformedExpr(f"state phase {phase} has no surface form")


def _print_bracket(e: Brkt) -> str:
    bra = _state_part_str(e.bra.label, e.bra.phase, True)
    ket = _state_part_str(e.ket.label, e.ket.phase, False)
    if e.ops:
        mid = " ".join("P" if o.which == "momentum" else "X" for o in e.ops)
        return f"<{bra}|{mid}|{ket}>"
    return f"<{bra}|{ket}>"


def print_expr(e: Expr) -> str:
    """Canonical text for e; parse_expr(print_expr(e)) reconstructs e."""
    return _print(e, _PREC_SUM)


# ---------------------------------------------------------------------------
# derivation scripts


@dataclass(frozen=True)
class Justification:
    name: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"{self.name}({', '.join(self.args)})" if self.args else self.name


@dataclass(frozen=True)
class Assumption:
    name: str
    lhs: Expr
    rhs: Expr
    rationale: str
    span: SourceSpan


@dataclass(frozen=True)
class Step:
    expr: Expr
    just: Justification
    text: str
    span: SourceSpan


@dataclass(frozen=True)
class Script:
    name: str
    assumptions: tuple[Assumption, ...]
    steps: tuple[Step, ...]


_JUST_NAMES = {
    "start",
    "rule",
    "axiom",
    "insert-identity",
    "inner-product",
    "equivalence",
    "differentiate",
    "completeness",
    "solve",
}

_JUST_RE = re.compile(r"^([a-z][a-z-]*)(?:\(([^()]*)\))?$")


def _parse_justification(text: str, span: SourceSpan) -> Justification:
    m = _JUST_RE.match(text.strip())
    if not m:
        raise ScriptError(f"malformed justification {text.strip()!r}", span)
    name = m.group(1)
    if name not in _JUST_NAMES:
        raise ScriptError(f"unknown justification {name!r}", span)
    args = tuple(a.strip() for a in m.group(2).split(",")) if m.group(2) else ()
    if args == ("",):
        args = ()
    needs_arg = {"rule": 1, "axiom": 1, "insert-identity": 1, "differentiate": 1, "solve": 1}
    if name in needs_arg and len(args) != needs_arg[name]:
        raise ScriptError(f"{name} takes exactly {needs_arg[name]} argument", span)
    if name in ("start", "inner-product", "equivalence", "completeness") and args:
        raise ScriptError(f"{name} takes no arguments", span)
    return Justification(name, args)


def parse_script(text: str, name: str = "<script>") -> Script:
    """Parse a derivation script.  Raises ScriptError / ParseError."""
    assumptions: list[Assumption] = []
    steps: list[Step] = []
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        comment = raw.split("#", 1)[1].strip() if "#" in raw else ""
        if not line.strip():
            continue
        span = SourceSpan(lineno, 0, len(raw))
        stripped = line.strip()
        if stripped.startswith("assume "):
            body = stripped[len("assume "):]
            if ":" not in body:
                raise ScriptError("assume line needs '<name>: <lhs> = <rhs>'", span)
            aname, eqn = body.split(":", 1)
            aname = aname.strip()
            if not aname:
                raise ScriptError("assumption name is empty", span)
            if aname in seen:
                raise ScriptError(
                    f"duplicate assumption {aname!r} (first on line {seen[aname]})", span
                )
            seen[aname] = lineno
            toks = _tokenize(eqn, lineno)
            p = _Parser(toks)
            lhs = p.expr()
            p.expect("=")
            rhs = p.expr()
            if p.peek().kind != "end":
                raise ParseError(f"trailing input {p.peek().text!r}", p.peek().span)
            assumptions.append(Assumption(aname, lhs, rhs, comment, span))
        elif stripped.startswith("step "):
            body = stripped[len("step "):]
            if " by " not in body:
                raise ScriptError("step line needs '<expr> by <justification>'", span)
            expr_text, just_text = body.rsplit(" by ", 1)
            expr = parse_expr(expr_text, lineno)
            just = _parse_justification(just_text, span)
            steps.append(Step(expr, just, expr_text.strip(), span))
        else:
            raise ScriptError(f"unrecognized line {stripped.split()[0]!r}", span)
    if not steps:
        raise ScriptError("script has no steps")
    if steps[0].just.name != "start":
        raise ScriptError("the first step must be justified by start", steps[0].span)
    return Script(name, tuple(assumptions), tuple(steps))
