"""Deformed-derivative variational calculus: symbolic derivation and numerics."""

from .symbolic import (
    E,
    Expr,
    differentiate,
    equivalent,
    evaluate,
    parse,
    render,
    simplify,
    substitute,
)
from .kernels import (
    ConformableInterval,
    Hausdorff,
    Identity,
    LambdaExp,
    eval_deformed_numeric,
    expand_deformed,
    kernel_factor,
)

__version__ = "0.1.0"
