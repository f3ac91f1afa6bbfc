"""Exact symbolic layer: expression trees and the operations on them."""

from .expr import (
    Add,
    Const,
    Deformed,
    Derivative,
    E,
    Expr,
    Func,
    HALF,
    Mul,
    ONE,
    Offset,
    Pow,
    Sym,
    ZERO,
    as_expr,
    exp,
    func,
    log,
    sqrt,
    sym,
)
from .errors import AllPointsSingular, EvalSingularity, ParseError, SymbolicError, UnboundSymbol
from .simplify import simplify
from .calculus import differentiate, substitute
from .evaluate import evaluate, evaluate_array
from .equivalence import Equivalence, equivalent
from .render import render
from .parse import parse, parse_kernel, parse_sexpr
from .traverse import depends_on, free_names, has_operator
