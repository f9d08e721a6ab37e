"""deltaforge: exact Dirac-delta calculus, bra-ket reduction, and a numeric
cross-checking oracle for every rewrite rule."""

from .expr import (
    Bra,
    Brkt,
    CaptureError,
    Const,
    DeltaDeriv,
    EngineError,
    Exp,
    Expr,
    HBAR,
    HBar,
    Integral,
    Ket,
    MalformedExpr,
    Op,
    Pow,
    Prod,
    Sum,
    Sym,
    TimeDeriv,
    UndefinedProduct,
    conjugate,
    differentiate,
    eval_expr,
    free_vars,
    normalize,
    substitute,
    sym,
)
from .parser import ParseError, ScriptError, parse_expr, parse_script, print_expr
from .rewrite import (
    CATALOG,
    NoMatch,
    RewriteRule,
    RewriteTrace,
    RuleNotFound,
    StepBudgetExceeded,
    apply_rule,
    catalog_table,
    equivalent,
    simplify,
)
from .dirac import (
    CheckReport,
    DiracError,
    dirac_reduce,
    insert_identity,
    matrix_element,
    nd_reduce,
    nt_reduce,
    reduce_brackets,
    verify_script,
)

__version__ = "0.1.0"
