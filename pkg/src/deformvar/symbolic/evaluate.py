"""Numeric evaluation of expressions.

Bindings map a symbol name to a number and a function name to a number or a
callable of its (evaluated) arguments.  Derivatives of dependent functions are
looked up under primed keys (``"x'"``, ``"x''"``) for one-argument functions
and under ``"phi[1,0]"`` for several arguments; when only the undifferentiated
callable is bound, derivatives fall back to central differences.
"""

from __future__ import annotations

import math
from typing import Callable, Mapping

import numpy as np

from .errors import EvalSingularity, UnboundSymbol
from .expr import Add, Const, Deformed, Derivative, E, Expr, Func, Mul, Offset, Pow, Sym
from .traverse import has_operator

__all__ = ["evaluate", "evaluate_array", "binding_key"]

_FD_STEP = 1e-3


def binding_key(name: str, orders: tuple[int, ...]) -> str:
    """Bindings key of ``name`` differentiated ``orders`` times."""
    if not any(orders):
        return name
    if len(orders) == 1:
        return name + "'" * orders[0]
    return f"{name}[{','.join(str(o) for o in orders)}]"


def evaluate(e: Expr, b: Mapping[str, object] | None = None, **kw) -> float:
    """Evaluate ``e`` to an IEEE double at the given bindings."""
    out = evaluate_array(e, b, **kw)
    arr = np.asarray(out)
    if arr.ndim != 0:
        raise ValueError("bindings produced an array; use evaluate_array")
    return float(arr)


def evaluate_array(e: Expr, b: Mapping[str, object] | None = None, **kw):
    """Like :func:`evaluate` but lets bindings be numpy arrays (broadcast)."""
    env = dict(b or {})
    env.update(kw)
    if has_operator(e):
        from ..kernels import expand_deformed

        e = expand_deformed(e)
        if has_operator(e):
            raise EvalSingularity("expression still contains unexpandable operators")
    try:
        with np.errstate(all="raise"):
            val = _Evaluator(env).run(e)
    except (FloatingPointError, ZeroDivisionError, OverflowError) as exc:
        raise EvalSingularity(str(exc)) from None
    if not np.all(np.isfinite(val)):
        raise EvalSingularity("non-finite value")
    return val


class _Evaluator:
    def __init__(self, env: Mapping[str, object]):
        self.env = env
        self.memo: dict[Expr, object] = {}

    def run(self, e: Expr):
        hit = self.memo.get(e)
        if hit is not None:
            return hit
        out = self._eval(e)
        self.memo[e] = out
        return out

    def _eval(self, e: Expr):
        if isinstance(e, Const):
            return np.float64(e.value.numerator) / np.float64(e.value.denominator)
        if isinstance(e, Sym):
            if e == E:
                return np.float64(math.e)
            return self._lookup(e.name)
        if isinstance(e, Offset):
            return self._lookup(e.var) - self.run(e.origin)
        if isinstance(e, Add):
            acc = self.run(e.terms[0])
            for t in e.terms[1:]:
                acc = acc + self.run(t)
            return acc
        if isinstance(e, Mul):
            acc = self.run(e.factors[0])
            for f in e.factors[1:]:
                acc = acc * self.run(f)
            return acc
        if isinstance(e, Pow):
            return self._pow(e)
        if isinstance(e, Func):
            return self._func(e)
        if isinstance(e, (Deformed, Derivative)):  # pragma: no cover
            raise EvalSingularity("unexpanded operator")
        raise TypeError(type(e))  # pragma: no cover

    def _lookup(self, name: str):
        try:
            v = self.env[name]
        except KeyError:
            raise UnboundSymbol(name) from None
        if callable(v):
            raise UnboundSymbol(f"{name} is bound to a callable, expected a number")
        return np.asarray(v, dtype=float)[()]

    def _pow(self, e: Pow):
        b = self.run(e.base)
        x = self.run(e.exp)
        if isinstance(e.exp, Const) and e.exp.value.denominator == 1:
            n = int(e.exp.value)
            if np.any(np.asarray(b) == 0) and n < 0:
                raise EvalSingularity("zero raised to a negative power")
            return b**n if n >= 0 else 1.0 / b ** (-n)
        if np.any(np.asarray(b) < 0):
            raise EvalSingularity("negative base with non-integer exponent")
        if np.any(np.asarray(b) == 0) and np.any(np.asarray(x) <= 0):
            raise EvalSingularity("zero raised to a non-positive power")
        return np.power(b, x)

    def _func(self, e: Func):
        args = [self.run(a) for a in e.args]
        if e.name in ("log", "sin", "cos") and not any(e.orders):
            if e.name == "log":
                if np.any(np.asarray(args[0]) <= 0):
                    raise EvalSingularity("log of a non-positive number")
                return np.log(args[0])
            return getattr(np, e.name)(args[0])
        key = binding_key(e.name, e.orders)
        if key in self.env:
            return _call(self.env[key], args)
        if any(e.orders) and e.name in self.env and callable(self.env[e.name]):
            return _finite_difference(self.env[e.name], args, e.orders)
        raise UnboundSymbol(key)


def _call(v, args):
    if callable(v):
        return np.asarray(v(*args), dtype=float)[()]
    return np.asarray(v, dtype=float)[()]


def _finite_difference(fn: Callable, args, orders, h: float = _FD_STEP):
    """Mixed central differences with binomial stencils (O(h^2))."""
    stencils = []
    for n in orders:
        w = [(-1) ** k * math.comb(n, k) for k in range(n + 1)]
        offs = [(n / 2 - k) for k in range(n + 1)]
        stencils.append(list(zip(offs, w)))

    total = 0.0

    def rec(i, shifted, weight):
        nonlocal total
        if i == len(args):
            total = total + weight * np.asarray(fn(*shifted), dtype=float)
            return
        for off, w in stencils[i]:
            rec(i + 1, shifted + [args[i] + off * h], weight * w)

    rec(0, [], 1.0)
    return total / h ** sum(orders)
