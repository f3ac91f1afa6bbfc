"""Structural-then-randomized equivalence of expressions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AllPointsSingular, EvalSingularity
from .expr import Add, Const, Deformed, Derivative, E, Expr, Func, Mul, Offset, Sym, as_expr
from .simplify import simplify
from .traverse import walk, has_operator

__all__ = ["equivalent", "Equivalence"]


@dataclass
class Equivalence:
    """Truthy verdict plus the path that decided it."""

    ok: bool
    path: str  # "structural" or "numeric"
    max_error: float = 0.0
    points: int = 0
    difference: Expr | None = field(default=None, repr=False)

    def __bool__(self):
        return self.ok


class _RandomSmooth:
    """Positive smooth function ``1.25 + 0.5 * prod_i sin(w_i x_i + p_i)``."""

    def __init__(self, rng: np.random.Generator, arity: int):
        self.w = rng.uniform(0.3, 1.7, size=arity)
        self.p = rng.uniform(0.0, 2 * np.pi, size=arity)
        self.c = rng.uniform(0.9, 1.6)

    def __call__(self, *xs):
        out = 1.0
        for w, p, x in zip(self.w, self.p, xs):
            out = out * np.sin(w * x + p)
        return self.c + 0.5 * out


def _universe(*exprs: Expr):
    names: set[str] = set()
    heads: set[tuple[str, tuple[int, ...], int]] = set()
    for e in exprs:
        for n in walk(e):
            if isinstance(n, Sym) and n != E:
                names.add(n.name)
            elif isinstance(n, Func) and not (
                n.name in ("log", "sin", "cos") and not any(n.orders)
            ):
                heads.add((n.name, n.orders, len(n.args)))
            if isinstance(n, (Offset, Deformed, Derivative)):
                names.add(n.var)
    return sorted(names), sorted(heads)


def equivalent(a, b, trials: int = 12, seed: int = 0, tol: float = 1e-9) -> Equivalence:
    """Decide ``a == b``: exact normal form first, then random points.

    Symbols get values in [0.5, 2]; every distinct derivative of every
    function is replaced by an independent positive smooth random function, so
    the numeric check is an identity test in jet space.
    """
    from ..kernels import expand_deformed

    a = simplify(as_expr(a))
    b = simplify(as_expr(b))
    diff = simplify(Add(a, Mul(Const(-1), b)))
    if diff == Const(0):
        return Equivalence(True, "structural", 0.0, 0, diff)
    if has_operator(a):
        a = expand_deformed(a)
    if has_operator(b):
        b = expand_deformed(b)
    if simplify(Add(a, Mul(Const(-1), b))) == Const(0):
        return Equivalence(True, "structural", 0.0, 0, diff)

    from .evaluate import binding_key, evaluate

    names, heads = _universe(a, b)
    rng = np.random.default_rng(seed)
    good = 0
    worst = 0.0
    attempts = 0
    while good < trials and attempts < 20 * max(trials, 1):
        attempts += 1
        env: dict[str, object] = {n: float(rng.uniform(0.5, 2.0)) for n in names}
        for name, orders, arity in heads:
            env[binding_key(name, orders)] = _RandomSmooth(rng, arity)
        try:
            va = evaluate(a, env)
            vb = evaluate(b, env)
        except EvalSingularity:
            continue
        good += 1
        err = abs(va - vb) / (1.0 + abs(va))
        worst = max(worst, err)
        if err > tol:
            return Equivalence(False, "numeric", err, good, diff)
    if good == 0:
        raise AllPointsSingular("no non-singular sample point found")
    return Equivalence(True, "numeric", worst, good, diff)
