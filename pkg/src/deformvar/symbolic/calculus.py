"""Differentiation and substitution."""

from __future__ import annotations

from functools import lru_cache

from .expr import (
    Add,
    Const,
    Deformed,
    Derivative,
    E,
    Expr,
    Func,
    Mul,
    ONE,
    Offset,
    Pow,
    Sym,
    ZERO,
    as_expr,
)
from .simplify import simplify, split_coeff, terms_of
from .traverse import depends_on, find, free_names, replace, walk

__all__ = ["differentiate", "substitute"]


def differentiate(e: Expr, v, order: int = 1) -> Expr:
    """Exact derivative of ``e`` with respect to the variable ``v``.

    Deformed-operator nodes are not expanded: their derivative comes back as
    an ordinary :class:`Derivative` node wrapping the operator.
    """
    if order < 1:
        raise ValueError("order must be a positive integer")
    name = v.name if isinstance(v, Sym) else str(v)
    out = simplify(as_expr(e))
    for _ in range(order):
        out = simplify(_diff(out, name))
    return out


@lru_cache(maxsize=None)
def _diff(e: Expr, v: str) -> Expr:
    if not depends_on(e, v):
        return ZERO
    if isinstance(e, Sym):
        return ONE if e.name == v else ZERO
    if isinstance(e, Offset):
        d = ONE if e.var == v else ZERO
        return Add(d, Mul(Const(-1), _diff(e.origin, v)))
    if isinstance(e, Add):
        return Add(*(_diff(t, v) for t in e.terms))
    if isinstance(e, Mul):
        fs = e.factors
        out = []
        for i, f in enumerate(fs):
            df = _diff(f, v)
            if df != ZERO:
                out.append(Mul(*fs[:i], df, *fs[i + 1:]))
        return Add(*out) if out else ZERO
    if isinstance(e, Pow):
        b, x = e.base, e.exp
        db = _diff(b, v)
        if not depends_on(x, v):
            return Mul(x, Pow(b, Add(x, Const(-1))), db)
        dx = _diff(x, v)
        if b == E:
            return Mul(e, dx)
        return Mul(e, Add(Mul(dx, Func("log", (b,))), Mul(x, db, Pow(b, Const(-1)))))
    if isinstance(e, Func):
        if e.name == "log" and not any(e.orders):
            u = e.args[0]
            return Mul(_diff(u, v), Pow(u, Const(-1)))
        if e.name == "sin" and not any(e.orders):
            u = e.args[0]
            return Mul(Func("cos", (u,)), _diff(u, v))
        if e.name == "cos" and not any(e.orders):
            u = e.args[0]
            return Mul(Const(-1), Func("sin", (u,)), _diff(u, v))
        out = []
        for i, a in enumerate(e.args):
            da = _diff(a, v)
            if da != ZERO:
                out.append(Mul(e.derived(i), da))
        return Add(*out) if out else ZERO
    if isinstance(e, Deformed):
        return Derivative(e, v, 1)
    if isinstance(e, Derivative):
        if e.var == v:
            return Derivative(e.arg, v, e.order + 1)
        return Derivative(e, v, 1)
    raise TypeError(type(e))  # pragma: no cover


def substitute(e: Expr, target, replacement) -> Expr:
    """Replace every structural occurrence of ``target`` by ``replacement``.

    * a symbol target replaces that symbol everywhere;
    * a dependent-function target such as ``z(t)`` also rewrites its
      derivatives, ``z''(t)`` becoming the second derivative of the
      replacement;
    * a sum target such as ``t - a`` that does not occur verbatim in the
      canonical form is solved for one of its symbols that does not occur as
      a function argument, and that symbol is substituted instead;
    * an :class:`Offset` whose expansion equals the target is replaced too.

    The result is re-canonicalised.
    """
    e = simplify(as_expr(e))
    target = simplify(as_expr(target))
    replacement = simplify(as_expr(replacement))

    if isinstance(target, Func) and not any(target.orders) and all(
        isinstance(a, Sym) for a in target.args
    ):
        return simplify(_substitute_function(e, target, replacement))

    mapping = {target: replacement}
    for off in find(e, lambda n: isinstance(n, Offset)):
        if simplify(Add(Sym(off.var), Mul(Const(-1), off.origin))) == target:
            mapping[off] = replacement
    out = simplify(replace(e, mapping))

    if isinstance(target, Add) and _occurs(out, target) is False:
        solved = _solve_linear_symbol(target, replacement, out)
        if solved is not None:
            s, value = solved
            out = simplify(replace(out, {s: value}))
    return out


def _occurs(e: Expr, target: Expr) -> bool:
    return any(n == target for n in walk(e))


def _substitute_function(e: Expr, target: Func, replacement: Expr) -> Expr:
    argnames = [a.name for a in target.args]
    hits = find(e, lambda n: isinstance(n, Func) and n.name == target.name
                and n.args == target.args)
    mapping = {}
    for h in hits:
        val = replacement
        for name, n in zip(argnames, h.orders):
            if n:
                val = differentiate(val, name, n)
        mapping[h] = val
    return replace(e, mapping)


def _solve_linear_symbol(target: Expr, replacement: Expr, context: Expr):
    """Pick a symbol ``s`` with ``target = c*s + rest`` and return ``(s, value)``."""
    shielded = set()
    for n in walk(context):
        if isinstance(n, Func):
            for a in n.args:
                shielded |= free_names(a)
        if isinstance(n, Offset):
            shielded.add(n.var)
    candidates = []
    for t in terms_of(target):
        c, mono = split_coeff(t)
        if isinstance(mono, Sym) and mono != E:
            rest = simplify(Add(target, Mul(Const(-c), mono)))
            if not depends_on(rest, mono.name):
                candidates.append((mono.name in shielded, mono.name, mono, c, rest))
    if not candidates:
        return None
    candidates.sort(key=lambda item: (item[0], item[1]))
    _, _, s, c, rest = candidates[0]
    value = simplify(Mul(Add(replacement, Mul(Const(-1), rest)), Pow(Const(c), Const(-1))))
    return s, value
