"""Immutable expression trees with an exact canonical form.

Every algebraic operation in this package goes through :func:`normalize`,
which rewrites a tree into a unique normal form:

* sums are flattened, fully expanded (products distribute over sums, integer
  powers of sums are multiplied out) and like terms are collected;
* products are flattened, constants folded into a single exact complex
  rational coefficient, like bases merged into powers, and all exponential
  factors merged into a single ``exp``;
* term and factor order is fixed by a total order on trees, so two
  expressions are equal as normal forms iff their trees compare equal.

Constants are exact: a :class:`Const` holds a complex rational as a pair of
:class:`fractions.Fraction`.  No floating point enters symbolic computation.

Delta factors are formal distributions.  Products of delta derivatives with
proportional arguments (``delta(u)*delta(2*u)`` and friends) have no meaning
and are rejected with :class:`UndefinedProduct` during normalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Union


class EngineError(Exception):
    """Base class for all errors raised by this package."""


class MalformedExpr(EngineError):
    """An expression violates a structural invariant."""


class UndefinedProduct(EngineError):
    """A product of distributions with no distributional meaning."""


class CaptureError(EngineError):
    """A substitution would capture a bound variable."""


Rat = Fraction
Number = Union[int, Fraction]

# Symbol kinds.  Kinds are fixed by naming convention (see infer_kind) so that
# equal names always carry equal kinds and tree equality stays well defined.
KIND_COORDINATE = "coordinate"
KIND_MOMENTUM = "momentum"
KIND_PARAMETER = "parameter"
KIND_BOUND = "bound"

_KINDS = (KIND_COORDINATE, KIND_MOMENTUM, KIND_PARAMETER, KIND_BOUND)


def infer_kind(name: str) -> str:
    head = name[0]
    if head in "xy":
        return KIND_COORDINATE
    if head in "pq":
        return KIND_MOMENTUM
    if head in "uvw":
        return KIND_BOUND
    return KIND_PARAMETER


@dataclass(frozen=True)
class Expr:
    """Base node.  Subclasses are frozen dataclasses; trees are hashable."""

    def __str__(self) -> str:
        from .parser import print_expr

        return print_expr(self)

    # Light operator sugar for tests and internal construction.  The results
    # are raw trees; call normalize() to reach the canonical form.
    def __add__(self, other: "Expr") -> "Expr":
        return Sum((self, _coerce(other)))

    def __radd__(self, other) -> "Expr":
        return Sum((_coerce(other), self))

    def __sub__(self, other) -> "Expr":
        return Sum((self, Prod((MINUS_ONE, _coerce(other)))))

    def __rsub__(self, other) -> "Expr":
        return Sum((_coerce(other), Prod((MINUS_ONE, self))))

    def __mul__(self, other) -> "Expr":
        return Prod((self, _coerce(other)))

    def __rmul__(self, other) -> "Expr":
        return Prod((_coerce(other), self))

    def __neg__(self) -> "Expr":
        return Prod((MINUS_ONE, self))

    def __pow__(self, q) -> "Expr":
        return Pow(self, Fraction(q))


def _coerce(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, Fraction)):
        return Const(Fraction(v), Fraction(0))
    raise TypeError(f"cannot use {v!r} as an expression")


@dataclass(frozen=True)
class Sym(Expr):
    name: str
    kind: str = ""

    def __post_init__(self):
        if not self.name:
            raise MalformedExpr("empty symbol name")
        if self.kind not in _KINDS:
            raise MalformedExpr(f"bad symbol kind {self.kind!r}")


def sym(name: str, kind: Optional[str] = None) -> Sym:
    """Make a symbol; the kind is inferred from the name unless given."""
    return Sym(name, kind or infer_kind(name))


@dataclass(frozen=True)
class Const(Expr):
    """Exact complex rational: re + im*i."""

    re: Fraction
    im: Fraction = Fraction(0)

    def __post_init__(self):
        if not isinstance(self.re, Fraction) or not isinstance(self.im, Fraction):
            raise MalformedExpr("Const parts must be Fractions")

    @property
    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    @property
    def is_real(self) -> bool:
        return self.im == 0


def const(re: Number, im: Number = 0) -> Const:
    return Const(Fraction(re), Fraction(im))


@dataclass(frozen=True)
class HBar(Expr):
    """The reduced Planck constant as a distinguished positive atom."""


@dataclass(frozen=True)
class Sum(Expr):
    terms: tuple[Expr, ...]


@dataclass(frozen=True)
class Prod(Expr):
    factors: tuple[Expr, ...]


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exp: Fraction

    def __post_init__(self):
        if not isinstance(self.exp, Fraction):
            object.__setattr__(self, "exp", Fraction(self.exp))


@dataclass(frozen=True)
class Exp(Expr):
    arg: Expr


@dataclass(frozen=True)
class DeltaDeriv(Expr):
    """order-th derivative of the Dirac delta evaluated at arg; order >= 0."""

    order: int
    arg: Expr

    def __post_init__(self):
        if self.order < 0:
            raise MalformedExpr("negative delta derivative order")


@dataclass(frozen=True)
class Integral(Expr):
    """Formal integral over the whole real line in var."""

    var: Sym
    body: Expr


@dataclass(frozen=True)
class TimeDeriv(Expr):
    """Unevaluated order-th derivative of arg with respect to var."""

    order: int
    arg: Expr
    var: Sym

    def __post_init__(self):
        if self.order < 1:
            raise MalformedExpr("TimeDeriv order must be >= 1")


@dataclass(frozen=True)
class Op(Expr):
    which: str  # "position" | "momentum"

    def __post_init__(self):
        if self.which not in ("position", "momentum"):
            raise MalformedExpr(f"unknown operator {self.which!r}")


@dataclass(frozen=True)
class Bra(Expr):
    basis: str  # "x" | "p"
    label: Sym
    phase: Expr = field(default_factory=lambda: ONE)

    def __post_init__(self):
        if self.basis not in ("x", "p"):
            raise MalformedExpr(f"bad bra basis {self.basis!r}")


@dataclass(frozen=True)
class Ket(Expr):
    basis: str
    label: Sym
    phase: Expr = field(default_factory=lambda: ONE)

    def __post_init__(self):
        if self.basis not in ("x", "p"):
            raise MalformedExpr(f"bad ket basis {self.basis!r}")


@dataclass(frozen=True)
class Brkt(Expr):
    """A bracket <bra| op ... |ket> with at most two sandwiched operators."""

    bra: Bra
    ops: tuple[Op, ...]
    ket: Ket

    def __post_init__(self):
        if len(self.ops) > 2:
            raise MalformedExpr("at most two operators may appear in a bracket")


ZERO = Const(Fraction(0), Fraction(0))
ONE = Const(Fraction(1), Fraction(0))
MINUS_ONE = Const(Fraction(-1), Fraction(0))
I = Const(Fraction(0), Fraction(1))
TWO = Const(Fraction(2), Fraction(0))
HBAR = HBar()
PI = Sym("pi", KIND_PARAMETER)


# ---------------------------------------------------------------------------
# exact complex rational arithmetic on (re, im) Fraction pairs


def _cadd(a: Const, b: Const) -> Const:
    return Const(a.re + b.re, a.im + b.im)


def _cmul(a: Const, b: Const) -> Const:
    return Const(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re)


def _cinv(a: Const) -> Const:
    d = a.re * a.re + a.im * a.im
    if d == 0:
        raise MalformedExpr("division by zero constant")
    return Const(a.re / d, -a.im / d)


def _cpow(a: Const, n: int) -> Const:
    if n < 0:
        return _cpow(_cinv(a), -n)
    out = ONE
    b = a
    while n:
        if n & 1:
            out = _cmul(out, b)
        b = _cmul(b, b)
        n >>= 1
    return out


# ---------------------------------------------------------------------------
# total order on trees


_RANK = {
    Const: 0,
    Sym: 1,
    HBar: 2,
    Pow: 3,
    Exp: 4,
    TimeDeriv: 5,
    DeltaDeriv: 6,
    Integral: 7,
    Bra: 8,
    Ket: 9,
    Op: 10,
    Brkt: 11,
    Sum: 12,
    Prod: 13,
}


def sort_key(e: Expr):
    r = _RANK[type(e)]
    if isinstance(e, Const):
        return (r, e.re, e.im)
    if isinstance(e, Sym):
        return (r, e.name)
    if isinstance(e, HBar):
        return (r,)
    if isinstance(e, Pow):
        return (r, sort_key(e.base), e.exp)
    if isinstance(e, Exp):
        return (r, sort_key(e.arg))
    if isinstance(e, TimeDeriv):
        return (r, e.order, e.var.name, sort_key(e.arg))
    if isinstance(e, DeltaDeriv):
        return (r, e.order, sort_key(e.arg))
    if isinstance(e, Integral):
        return (r, e.var.name, sort_key(e.body))
    if isinstance(e, Bra):
        return (r, e.basis, e.label.name, sort_key(e.phase))
    if isinstance(e, Ket):
        return (r, e.basis, e.label.name, sort_key(e.phase))
    if isinstance(e, Op):
        return (r, e.which)
    if isinstance(e, Brkt):
        return (r, sort_key(e.bra), tuple(sort_key(o) for o in e.ops), sort_key(e.ket))
    if isinstance(e, Sum):
        return (r, tuple(sort_key(t) for t in e.terms))
    if isinstance(e, Prod):
        return (r, tuple(sort_key(f) for f in e.factors))
    raise MalformedExpr(f"unrankable node {type(e).__name__}")


# ---------------------------------------------------------------------------
# traversal helpers


def free_vars(e: Expr) -> frozenset[Sym]:
    """Symbols occurring free in e.  Only Integral binds its variable."""
    if isinstance(e, Sym):
        return frozenset((e,))
    if isinstance(e, (Const, HBar, Op)):
        return frozenset()
    if isinstance(e, Sum):
        return frozenset().union(*(free_vars(t) for t in e.terms))
    if isinstance(e, Prod):
        return frozenset().union(*(free_vars(f) for f in e.factors))
    if isinstance(e, Pow):
        return free_vars(e.base)
    if isinstance(e, Exp):
        return free_vars(e.arg)
    if isinstance(e, DeltaDeriv):
        return free_vars(e.arg)
    if isinstance(e, Integral):
        return free_vars(e.body) - {e.var}
    if isinstance(e, TimeDeriv):
        return free_vars(e.arg) | {e.var}
    if isinstance(e, (Bra, Ket)):
        return free_vars(e.phase) | {e.label}
    if isinstance(e, Brkt):
        return free_vars(e.bra) | free_vars(e.ket)
    raise MalformedExpr(f"cannot walk {type(e).__name__}")


def all_symbols(e: Expr) -> frozenset[Sym]:
    """Every symbol in e, bound or free.  Used to pick fresh names."""
    out: set[Sym] = set()

    def walk(n: Expr):
        if isinstance(n, Sym):
            out.add(n)
        elif isinstance(n, Sum):
            for t in n.terms:
                walk(t)
        elif isinstance(n, Prod):
            for f in n.factors:
                walk(f)
        elif isinstance(n, (Pow,)):
            walk(n.base)
        elif isinstance(n, Exp):
            walk(n.arg)
        elif isinstance(n, DeltaDeriv):
            walk(n.arg)
        elif isinstance(n, Integral):
            out.add(n.var)
            walk(n.body)
        elif isinstance(n, TimeDeriv):
            out.add(n.var)
            walk(n.arg)
        elif isinstance(n, (Bra, Ket)):
            out.add(n.label)
            walk(n.phase)
        elif isinstance(n, Brkt):
            walk(n.bra)
            walk(n.ket)

    walk(e)
    return frozenset(out)


def node_count(e: Expr) -> int:
    if isinstance(e, Sum):
        return 1 + sum(node_count(t) for t in e.terms)
    if isinstance(e, Prod):
        return 1 + sum(node_count(f) for f in e.factors)
    if isinstance(e, Pow):
        return 1 + node_count(e.base)
    if isinstance(e, Exp):
        return 1 + node_count(e.arg)
    if isinstance(e, DeltaDeriv):
        return 1 + node_count(e.arg)
    if isinstance(e, Integral):
        return 2 + node_count(e.body)
    if isinstance(e, TimeDeriv):
        return 2 + node_count(e.arg)
    if isinstance(e, (Bra, Ket)):
        return 2 + node_count(e.phase)
    if isinstance(e, Brkt):
        return 1 + node_count(e.bra) + len(e.ops) + node_count(e.ket)
    return 1


def total_delta_order(e: Expr) -> int:
    """Sum of derivative orders over all delta factors in e."""
    if isinstance(e, DeltaDeriv):
        return e.order + total_delta_order(e.arg)
    if isinstance(e, Sum):
        return sum(total_delta_order(t) for t in e.terms)
    if isinstance(e, Prod):
        return sum(total_delta_order(f) for f in e.factors)
    if isinstance(e, Pow):
        return total_delta_order(e.base)
    if isinstance(e, Exp):
        return total_delta_order(e.arg)
    if isinstance(e, Integral):
        return total_delta_order(e.body)
    if isinstance(e, TimeDeriv):
        return total_delta_order(e.arg)
    if isinstance(e, (Bra, Ket)):
        return total_delta_order(e.phase)
    if isinstance(e, Brkt):
        return total_delta_order(e.bra) + total_delta_order(e.ket)
    return 0


def contains_delta(e: Expr) -> bool:
    if isinstance(e, DeltaDeriv):
        return True
    if isinstance(e, Sum):
        return any(contains_delta(t) for t in e.terms)
    if isinstance(e, Prod):
        return any(contains_delta(f) for f in e.factors)
    if isinstance(e, Pow):
        return contains_delta(e.base)
    if isinstance(e, Exp):
        return contains_delta(e.arg)
    if isinstance(e, Integral):
        return contains_delta(e.body)
    if isinstance(e, TimeDeriv):
        return contains_delta(e.arg)
    if isinstance(e, (Bra, Ket)):
        return contains_delta(e.phase)
    if isinstance(e, Brkt):
        return contains_delta(e.bra) or contains_delta(e.ket)
    return False


def contains_bracket(e: Expr) -> bool:
    if isinstance(e, (Brkt, Bra, Ket, Op)):
        return True
    if isinstance(e, Sum):
        return any(contains_bracket(t) for t in e.terms)
    if isinstance(e, Prod):
        return any(contains_bracket(f) for f in e.factors)
    if isinstance(e, Pow):
        return contains_bracket(e.base)
    if isinstance(e, Exp):
        return contains_bracket(e.arg)
    if isinstance(e, Integral):
        return contains_bracket(e.body)
    if isinstance(e, TimeDeriv):
        return contains_bracket(e.arg)
    return False


# ---------------------------------------------------------------------------
# positivity (used to justify distributing fractional powers)


def is_positive(e: Expr) -> bool:
    """Formally positive: positive rationals, hbar, pi, and their products
    and powers.  Symbols other than pi are real but of unknown sign."""
    if isinstance(e, Const):
        return e.is_real and e.re > 0
    if isinstance(e, HBar):
        return True
    if isinstance(e, Sym):
        return e.name == "pi"
    if isinstance(e, Pow):
        return is_positive(e.base)
    if isinstance(e, Prod):
        return all(is_positive(f) for f in e.factors)
    if isinstance(e, Sum):
        return all(is_positive(t) for t in e.terms)
    return False


# ---------------------------------------------------------------------------
# canonical constructors


def _iroot(n: int, k: int) -> Optional[int]:
    """Exact integer k-th root of n >= 0, or None."""
    if n < 0:
        return None
    if n in (0, 1):
        return n
    r = round(n ** (1.0 / k))
    for c in (r - 1, r, r + 1):
        if c >= 0 and c**k == n:
            return c
    return None


def _const_root(c: Fraction, q: Fraction) -> Optional[Fraction]:
    """Exact value of c**q for positive rational c, or None."""
    nr = _iroot(c.numerator, q.denominator)
    dr = _iroot(c.denominator, q.denominator)
    if nr is None or dr is None:
        return None
    return Fraction(nr, dr) ** q.numerator


def make_pow(base: Expr, q: Fraction) -> Expr:
    q = Fraction(q)
    if q == 0:
        return ONE
    if q == 1:
        return base
    if isinstance(base, DeltaDeriv):
        raise UndefinedProduct("powers of delta distributions are undefined")
    if isinstance(base, Const):
        if q.denominator == 1:
            if base.is_zero and q < 0:
                raise MalformedExpr("zero raised to a negative power")
            return _cpow(base, q.numerator)
        if base.is_zero:
            return ZERO
        if base.is_real and base.re > 0:
            r = _const_root(base.re, q)
            if r is not None:
                return Const(r, Fraction(0))
            if base.re.denominator != 1:
                # canonical fractional powers use integer bases:
                # (n/d)^q -> n^q * d^(-q)
                num, den = base.re.numerator, base.re.denominator
                return make_prod(
                    [make_pow(Const(Fraction(num)), q), make_pow(Const(Fraction(den)), -q)]
                )
        return Pow(base, q)
    if isinstance(base, Pow):
        if q.denominator == 1 or is_positive(base.base):
            return make_pow(base.base, base.exp * q)
        return Pow(base, q)
    if isinstance(base, Prod):
        if q.denominator == 1 or all(is_positive(f) for f in base.factors):
            return make_prod([make_pow(f, q) for f in base.factors])
        return Pow(base, q)
    if isinstance(base, Sum):
        if q.denominator == 1 and q >= 2:
            out: Expr = base
            for _ in range(q.numerator - 1):
                out = make_prod([out, base])
            return out
        return Pow(base, q)
    if isinstance(base, Exp):
        if q.denominator == 1:
            return make_exp(make_prod([const(q.numerator), base.arg]))
        return Pow(base, q)
    return Pow(base, q)


def make_exp(arg: Expr) -> Expr:
    if isinstance(arg, Const) and arg.is_zero:
        return ONE
    return Exp(arg)


def _split_coeff(t: Expr) -> tuple[Const, Optional[Expr]]:
    """Split a normalized monomial into (constant coefficient, rest)."""
    if isinstance(t, Const):
        return t, None
    if isinstance(t, Prod) and isinstance(t.factors[0], Const):
        rest = t.factors[1:]
        return t.factors[0], rest[0] if len(rest) == 1 else Prod(rest)
    return ONE, t


def make_sum(terms: Iterable[Expr]) -> Expr:
    flat: list[Expr] = []
    for t in terms:
        if isinstance(t, Sum):
            flat.extend(t.terms)
        else:
            flat.append(t)
    acc: dict[tuple, list] = {}  # key -> [coeff, rest]
    const_acc = ZERO
    for t in flat:
        coeff, rest = _split_coeff(t)
        if rest is None:
            const_acc = _cadd(const_acc, coeff)
            continue
        k = sort_key(rest)
        if k in acc:
            acc[k][0] = _cadd(acc[k][0], coeff)
        else:
            acc[k] = [coeff, rest]
    out: list[Expr] = []
    for k in sorted(acc):
        coeff, rest = acc[k]
        if coeff.is_zero:
            continue
        if coeff == ONE:
            out.append(rest)
        elif isinstance(rest, Prod):
            out.append(Prod((coeff,) + rest.factors))
        else:
            out.append(Prod((coeff, rest)))
    if not const_acc.is_zero:
        out.insert(0, const_acc)
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Sum(tuple(out))


def _args_proportional(a: Expr, b: Expr) -> bool:
    """True if a = lam * b for some rational lam (both normalized)."""
    if a == b:
        return True
    ta = a.terms if isinstance(a, Sum) else (a,)
    tb = b.terms if isinstance(b, Sum) else (b,)
    if len(ta) != len(tb):
        return False
    ca, ra = _split_coeff(ta[0])
    cb, rb = _split_coeff(tb[0])
    if ra != rb or cb.is_zero:
        return False
    lam = _cmul(ca, _cinv(cb))
    scaled = make_sum([make_prod([lam, t]) for t in tb])
    return scaled == a


def make_prod(factors: Iterable[Expr]) -> Expr:
    flat: list[Expr] = []
    stack = list(factors)
    while stack:
        f = stack.pop()
        if isinstance(f, Prod):
            stack.extend(f.factors)
        else:
            flat.append(f)
    flat.reverse()

    # distribute over any sum factor (normalized sums hold monomials only,
    # so one level of expansion suffices; recursion handles the rest)
    if any(isinstance(f, Sum) for f in flat):
        choices: list[list[Expr]] = [[]]
        for f in flat:
            if isinstance(f, Sum):
                choices = [c + [t] for c in choices for t in f.terms]
            else:
                choices = [c + [f] for c in choices]
        return make_sum([make_prod(c) for c in choices])

    coeff = ONE
    powmap: dict[tuple, list] = {}  # key(base) -> [base, exponent]
    exp_args: list[Expr] = []
    restart: list[Expr] = []
    for f in flat:
        if isinstance(f, Const):
            coeff = _cmul(coeff, f)
        elif isinstance(f, Exp):
            exp_args.append(f.arg)
        elif isinstance(f, Pow):
            k = sort_key(f.base)
            if k in powmap:
                powmap[k][1] += f.exp
            else:
                powmap[k] = [f.base, Fraction(f.exp)]
        else:
            k = sort_key(f)
            if k in powmap:
                powmap[k][1] += 1
            else:
                powmap[k] = [f, Fraction(1)]
    if coeff.is_zero:
        return ZERO

    out: list[Expr] = []
    for k in sorted(powmap):
        base, q = powmap[k]
        if q == 0:
            continue  # b^0 = 1 for generically nonzero b
        r = make_pow(base, q) if q != 1 else base
        if isinstance(r, Const):
            coeff = _cmul(coeff, r)
        elif isinstance(r, (Prod, Sum)):
            restart.append(r)
        else:
            out.append(r)
    if exp_args:
        merged = make_exp(make_sum(exp_args))
        if not (isinstance(merged, Const) and merged == ONE):
            out.append(merged)
    if restart:
        return make_prod([coeff] + out + restart)

    deltas = [f for f in out if isinstance(f, DeltaDeriv)]
    for i in range(len(deltas)):
        for j in range(i + 1, len(deltas)):
            if _args_proportional(deltas[i].arg, deltas[j].arg):
                raise UndefinedProduct(
                    f"product of delta factors with proportional arguments: "
                    f"{deltas[i]} * {deltas[j]}"
                )

    out.sort(key=sort_key)
    if not out:
        return coeff
    if coeff != ONE:
        out.insert(0, coeff)
    if len(out) == 1:
        return out[0]
    return Prod(tuple(out))


def make_timederiv(order: int, arg: Expr, var: Sym) -> Expr:
    if order == 0:
        return arg
    if var not in free_vars(arg):
        return ZERO
    if isinstance(arg, Sum):
        return make_sum([make_timederiv(order, t, var) for t in arg.terms])
    if isinstance(arg, TimeDeriv) and arg.var == var:
        return make_timederiv(order + arg.order, arg.arg, var)
    if isinstance(arg, Prod):
        dep = [f for f in arg.factors if var in free_vars(f)]
        indep = [f for f in arg.factors if var not in free_vars(f)]
        if indep:
            inner = dep[0] if len(dep) == 1 else Prod(tuple(dep))
            return make_prod(indep + [make_timederiv(order, inner, var)])
    return TimeDeriv(order, arg, var)


def normalize(e: Expr) -> Expr:
    """Rewrite e into the unique canonical form described in the module doc."""
    if isinstance(e, (Sym, Const, HBar, Op)):
        return e
    if isinstance(e, Sum):
        return make_sum([normalize(t) for t in e.terms])
    if isinstance(e, Prod):
        return make_prod([normalize(f) for f in e.factors])
    if isinstance(e, Pow):
        return make_pow(normalize(e.base), e.exp)
    if isinstance(e, Exp):
        return make_exp(normalize(e.arg))
    if isinstance(e, DeltaDeriv):
        return DeltaDeriv(e.order, normalize(e.arg))
    if isinstance(e, Integral):
        body = normalize(e.body)
        if isinstance(body, Const) and body.is_zero:
            return ZERO
        return Integral(e.var, body)
    if isinstance(e, TimeDeriv):
        return make_timederiv(e.order, normalize(e.arg), e.var)
    if isinstance(e, Bra):
        return Bra(e.basis, e.label, normalize(e.phase))
    if isinstance(e, Ket):
        return Ket(e.basis, e.label, normalize(e.phase))
    if isinstance(e, Brkt):
        return Brkt(normalize(e.bra), e.ops, normalize(e.ket))
    raise MalformedExpr(f"cannot normalize {type(e).__name__}")


# ---------------------------------------------------------------------------
# substitution


def substitute(e: Expr, target: Sym, repl: Expr) -> Expr:
    """Replace free occurrences of target by repl, then normalize.

    Substitution is simultaneous: occurrences of target inside repl are not
    rescanned, so e.g. x -> x' - x is well defined.  Raises CaptureError if
    repl would be captured by a binder in e.
    """
    repl_free = free_vars(repl)

    def go(n: Expr) -> Expr:
        if isinstance(n, Sym):
            return repl if n == target else n
        if isinstance(n, (Const, HBar, Op)):
            return n
        if isinstance(n, Sum):
            return Sum(tuple(go(t) for t in n.terms))
        if isinstance(n, Prod):
            return Prod(tuple(go(f) for f in n.factors))
        if isinstance(n, Pow):
            return Pow(go(n.base), n.exp)
        if isinstance(n, Exp):
            return Exp(go(n.arg))
        if isinstance(n, DeltaDeriv):
            return DeltaDeriv(n.order, go(n.arg))
        if isinstance(n, Integral):
            if n.var == target:
                return n  # target is shadowed inside
            if n.var in repl_free and target in free_vars(n.body):
                raise CaptureError(
                    f"substituting {target.name} -> {repl} would capture "
                    f"integration variable {n.var.name}"
                )
            return Integral(n.var, go(n.body))
        if isinstance(n, TimeDeriv):
            if n.var == target:
                if not isinstance(repl, Sym):
                    raise MalformedExpr("derivative variable must stay a symbol")
                return TimeDeriv(n.order, go(n.arg), repl)
            return TimeDeriv(n.order, go(n.arg), n.var)
        if isinstance(n, (Bra, Ket)):
            label = n.label
            if label == target:
                if not isinstance(repl, Sym):
                    raise MalformedExpr("state labels must stay symbols")
                label = repl
            cls = Bra if isinstance(n, Bra) else Ket
            return cls(n.basis, label, go(n.phase))
        if isinstance(n, Brkt):
            return Brkt(go(n.bra), n.ops, go(n.ket))
        raise MalformedExpr(f"cannot substitute in {type(n).__name__}")

    return normalize(go(e))


# ---------------------------------------------------------------------------
# differentiation


def differentiate(e: Expr, var: Sym) -> Expr:
    """Formal derivative d/dvar, returned in canonical form.

    Distribution derivatives follow the chain rule: the derivative of
    ddelta(g, n) is g' * ddelta(g, n+1).  Unevaluated TimeDeriv nodes in the
    same variable stack; in other variables the derivative passes through.
    Brackets must be reduced away before differentiating.
    """
    d = _diff(normalize(e), var)
    return normalize(d)


def _diff(e: Expr, var: Sym) -> Expr:
    if isinstance(e, Sym):
        return ONE if e == var else ZERO
    if isinstance(e, (Const, HBar)):
        return ZERO
    if isinstance(e, Sum):
        return make_sum([_diff(t, var) for t in e.terms])
    if isinstance(e, Prod):
        parts = []
        for i, f in enumerate(e.factors):
            df = _diff(f, var)
            if isinstance(df, Const) and df.is_zero:
                continue
            rest = e.factors[:i] + e.factors[i + 1 :]
            parts.append(make_prod(list(rest) + [df]))
        return make_sum(parts)
    if isinstance(e, Pow):
        db = _diff(e.base, var)
        if isinstance(db, Const) and db.is_zero:
            return ZERO
        return make_prod([Const(Fraction(e.exp), Fraction(0)), make_pow(e.base, e.exp - 1), db])
    if isinstance(e, Exp):
        da = _diff(e.arg, var)
        if isinstance(da, Const) and da.is_zero:
            return ZERO
        return make_prod([da, e])
    if isinstance(e, DeltaDeriv):
        da = _diff(e.arg, var)
        if isinstance(da, Const) and da.is_zero:
            return ZERO
        return make_prod([da, DeltaDeriv(e.order + 1, e.arg)])
    if isinstance(e, Integral):
        if e.var == var:
            return ZERO  # var is bound: nothing free to vary
        return Integral(e.var, _diff(e.body, var))
    if isinstance(e, TimeDeriv):
        if e.var == var:
            return TimeDeriv(e.order + 1, e.arg, e.var)
        return make_timederiv(e.order, _diff(e.arg, var), e.var)
    if isinstance(e, (Bra, Ket, Brkt, Op)):
        raise MalformedExpr("cannot differentiate a bracket; reduce it first")
    raise MalformedExpr(f"cannot differentiate {type(e).__name__}")


# ---------------------------------------------------------------------------
# formal conjugation


def conjugate(e: Expr) -> Expr:
    """Complex conjugate under the convention that all symbols are real."""
    return normalize(_conj(e))


def _conj(e: Expr) -> Expr:
    if isinstance(e, Const):
        return Const(e.re, -e.im)
    if isinstance(e, (Sym, HBar)):
        return e
    if isinstance(e, Sum):
        return Sum(tuple(_conj(t) for t in e.terms))
    if isinstance(e, Prod):
        return Prod(tuple(_conj(f) for f in e.factors))
    if isinstance(e, Pow):
        return Pow(_conj(e.base), e.exp)
    if isinstance(e, Exp):
        return Exp(_conj(e.arg))
    if isinstance(e, DeltaDeriv):
        return DeltaDeriv(e.order, _conj(e.arg))
    if isinstance(e, Integral):
        return Integral(e.var, _conj(e.body))
    if isinstance(e, TimeDeriv):
        return TimeDeriv(e.order, _conj(e.arg), e.var)
    if isinstance(e, Brkt):
        # <a|A B|b>* = <b|B A|a> for the hermitian operators used here
        return Brkt(
            Bra(e.ket.basis, e.ket.label, _conj(e.ket.phase)),
            tuple(reversed(e.ops)),
            Ket(e.bra.basis, e.bra.label, _conj(e.bra.phase)),
        )
    raise MalformedExpr(f"cannot conjugate {type(e).__name__}")


def is_formally_real(e: Expr) -> bool:
    n = normalize(e)
    return conjugate(n) == n


# ---------------------------------------------------------------------------
# numeric evaluation of delta-free expressions


def eval_expr(e: Expr, env: dict, hbar: float = 1.0):
    """Evaluate a delta-free, integral-free expression numerically.

    env maps symbol names to numbers or numpy arrays; pi defaults to math.pi.
    Results are complex (callers take .real when appropriate).
    """
    if isinstance(e, Sym):
        if e.name in env:
            return env[e.name]
        if e.name == "pi":
            return math.pi
        raise ValueError(f"unbound symbol {e.name!r} in numeric evaluation")
    if isinstance(e, HBar):
        return env.get("hbar", hbar)
    if isinstance(e, Const):
        return complex(float(e.re), float(e.im))
    if isinstance(e, Sum):
        total = eval_expr(e.terms[0], env, hbar)
        for t in e.terms[1:]:
            total = total + eval_expr(t, env, hbar)
        return total
    if isinstance(e, Prod):
        total = eval_expr(e.factors[0], env, hbar)
        for f in e.factors[1:]:
            total = total * eval_expr(f, env, hbar)
        return total
    if isinstance(e, Pow):
        base = eval_expr(e.base, env, hbar)
        if e.exp.denominator == 1:
            return base ** int(e.exp)
        return (base + 0j) ** float(e.exp)
    if isinstance(e, Exp):
        import numpy as np

        return np.exp(eval_expr(e.arg, env, hbar))
    raise ValueError(f"{type(e).__name__} is not numerically evaluable")
