"""Canonical normal form.

The normal form is a sum of products: nested sums and products are
flattened, numeric coefficients are folded into a leading rational constant,
like terms are collected, powers of identical bases are merged by adding
exponents, and products are distributed over sums.  Positive integer powers
of sums are expanded.

Symbols, applied functions and interval offsets are treated as positive
reals when a rule needs it, which is the convention for every quantity the
catalog works with (masses, densities, elapsed time ``t - a``).
"""

from __future__ import annotations

from fractions import Fraction
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
    sort_key,
)
from .traverse import has_operator

__all__ = ["simplify", "split_coeff", "terms_of", "factors_of", "is_positive"]

_MAX_EXPAND_POWER = 12


@lru_cache(maxsize=None)
def simplify(e: Expr) -> Expr:
    if isinstance(e, (Const, Sym)):
        return e
    if isinstance(e, Offset):
        origin = simplify(e.origin)
        return Offset(e.var, origin)
    if isinstance(e, Func):
        args = tuple(simplify(a) for a in e.args)
        if e.name == "log" and not any(e.orders):
            if args[0] == E:
                return ONE
            if args[0] == ONE:
                return ZERO
        return Func(e.name, args, e.orders)
    if isinstance(e, Add):
        return _add([simplify(t) for t in e.terms])
    if isinstance(e, Mul):
        return _mul([simplify(f) for f in e.factors])
    if isinstance(e, Pow):
        return _pow(simplify(e.base), simplify(e.exp))
    if isinstance(e, Deformed):
        params = tuple(simplify(p) for p in e.kernel.params)
        return Deformed(e.kernel.with_params(params), e.var, simplify(e.arg))
    if isinstance(e, Derivative):
        arg = simplify(e.arg)
        if not has_operator(arg):
            from .calculus import differentiate

            return differentiate(arg, e.var, e.order)
        if isinstance(arg, Derivative) and arg.var == e.var:
            return Derivative(arg.arg, e.var, arg.order + e.order)
        return Derivative(arg, e.var, e.order)
    raise TypeError(type(e))  # pragma: no cover


def split_coeff(e: Expr) -> tuple[Fraction, Expr]:
    """Split a simplified term into (rational coefficient, monomial)."""
    if isinstance(e, Const):
        return e.value, ONE
    if isinstance(e, Mul) and isinstance(e.factors[0], Const):
        rest = e.factors[1:]
        return e.factors[0].value, rest[0] if len(rest) == 1 else Mul(*rest)
    return Fraction(1), e


def terms_of(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, Add):
        return e.terms
    if e == ZERO:
        return ()
    return (e,)


def factors_of(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, Mul):
        return e.factors
    return (e,)


def _make_term(c: Fraction, mono: Expr) -> Expr:
    if c == 0:
        return ZERO
    if mono == ONE:
        return Const(c)
    if c == 1:
        return mono
    return Mul(Const(c), *factors_of(mono))


def _add(terms: list[Expr]) -> Expr:
    coeffs: dict[Expr, Fraction] = {}
    stack = list(terms)
    while stack:
        t = stack.pop()
        if isinstance(t, Add):
            stack.extend(t.terms)
            continue
        c, mono = split_coeff(t)
        if c == 0:
            continue
        coeffs[mono] = coeffs.get(mono, Fraction(0)) + c
    out = [_make_term(c, m) for m, c in coeffs.items() if c != 0]
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Add(*out)


def is_positive(e: Expr) -> bool:
    if isinstance(e, Const):
        return e.value > 0
    if isinstance(e, (Sym, Offset)):
        return True
    if isinstance(e, Func):
        return e.name not in ("log", "sin", "cos") and not any(e.orders)
    if isinstance(e, Pow):
        return is_positive(e.base)
    if isinstance(e, (Mul, Add)):
        return all(is_positive(c) for c in e.children)
    return False


def _mul(factors: list[Expr]) -> Expr:
    coeff = Fraction(1)
    sums: list[Add] = []
    bases: dict[Expr, list[Expr]] = {}
    stack = list(factors)
    while stack:
        f = stack.pop()
        if isinstance(f, Mul):
            stack.extend(f.factors)
        elif isinstance(f, Const):
            coeff *= f.value
            if coeff == 0:
                return ZERO
        elif isinstance(f, Add):
            sums.append(f)
        elif isinstance(f, Pow):
            bases.setdefault(f.base, []).append(f.exp)
        else:
            bases.setdefault(f, []).append(ONE)

    if sums:
        rest = _mul([Const(coeff)] + [
            _pow(b, _add(list(es))) if len(es) > 1 else _pow_or_base(b, es[0])
            for b, es in bases.items()
        ])
        acc = [rest]
        for s in sums:
            acc = [_mul([a, t]) for a in acc for t in s.terms]
        return _add(acc)

    merged: list[Expr] = []
    needs_again = False
    for b, es in bases.items():
        ex = es[0] if len(es) == 1 else _add(list(es))
        p = _pow(b, ex) if len(es) > 1 else _pow_or_base(b, ex)
        if isinstance(p, (Const, Add, Mul)):
            needs_again = True
        merged.append(p)
    if needs_again:
        return _mul([Const(coeff)] + merged)

    merged = [m for m in merged if m != ONE]
    merged.sort(key=sort_key)
    if not merged:
        return Const(coeff)
    if coeff == 1 and len(merged) == 1:
        return merged[0]
    if coeff == 1:
        return Mul(*merged)
    return Mul(Const(coeff), *merged)


def _pow_or_base(b: Expr, ex: Expr) -> Expr:
    if ex == ONE:
        return b
    return Pow(b, ex)


def _pow(b: Expr, ex: Expr) -> Expr:
    if ex == ZERO:
        return ONE
    if ex == ONE:
        return b
    if b == ONE:
        return ONE
    if b == ZERO:
        if isinstance(ex, Const) and ex.value > 0:
            return ZERO
        return Pow(b, ex)
    integer_exp = isinstance(ex, Const) and ex.value.denominator == 1
    if isinstance(b, Const) and isinstance(ex, Const):
        return _const_pow(b.value, ex.value)
    if isinstance(b, Pow):
        if integer_exp or is_positive(b.base):
            return _pow(b.base, _mul([b.exp, ex]))
        return Pow(b, ex)
    if isinstance(b, Mul):
        if integer_exp or all(is_positive(f) for f in b.factors):
            return _mul([_pow(f, ex) for f in b.factors])
        c, mono = split_coeff(b)
        if c > 0 and mono is not b:
            return _mul([_const_pow(c, ex.value) if isinstance(ex, Const) else Pow(Const(c), ex),
                         _pow(mono, ex)])
        return Pow(b, ex)
    if isinstance(b, Add) and integer_exp and 2 <= ex.value <= _MAX_EXPAND_POWER:
        acc: Expr = b
        for _ in range(int(ex.value) - 1):
            acc = _mul([acc, b])
        return acc
    return Pow(b, ex)


def _int_root(n: int, q: int) -> int | None:
    if n < 0:
        return None
    r = round(n ** (1.0 / q))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand**q == n:
            return cand
    return None


def _const_pow(c: Fraction, p: Fraction) -> Expr:
    if p.denominator == 1:
        if c == 0 and p < 0:
            return Pow(Const(c), Const(p))
        return Const(c ** int(p))
    if c < 0:
        return Pow(Const(c), Const(p))
    q = p.denominator
    rn, rd = _int_root(c.numerator, q), _int_root(c.denominator, q)
    if rn is not None and rd is not None:
        return Const(Fraction(rn, rd) ** p.numerator)
    whole = p.numerator // q
    frac = p - whole
    head = Const(c**whole)
    tail = Pow(Const(c), Const(frac))
    if head == ONE:
        return tail
    return Mul(head, tail)
