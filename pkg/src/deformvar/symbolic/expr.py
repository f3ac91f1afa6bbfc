"""Immutable expression nodes.

Every node is hashable and compares structurally.  Children of sums and
products are kept sorted by :func:`sort_key`, so two constructions of the same
sum are the same object up to equality.  Constants are exact
:class:`fractions.Fraction` values; floats never enter a tree.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

__all__ = [
    "Expr",
    "Const",
    "Sym",
    "Offset",
    "Func",
    "Add",
    "Mul",
    "Pow",
    "Deformed",
    "Derivative",
    "E",
    "ZERO",
    "ONE",
    "HALF",
    "as_expr",
    "sym",
    "func",
    "exp",
    "log",
    "sqrt",
    "sort_key",
    "BUILTIN_FUNCTIONS",
]

#: Elementary functions with known derivative and numeric rules.
BUILTIN_FUNCTIONS = frozenset({"log", "sin", "cos"})


class Expr:
    __slots__ = ("_hash", "_key")

    _rank = 99

    def _fields(self) -> tuple:
        raise NotImplementedError

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other):
            return NotImplemented if not isinstance(other, Expr) else False
        return hash(self) == hash(other) and self._fields() == other._fields()

    def __hash__(self):
        try:
            return self._hash
        except AttributeError:
            h = hash((type(self).__name__,) + self._fields())
            object.__setattr__(self, "_hash", h)
            return h

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def __reduce__(self):
        return (type(self), self._fields())

    # arithmetic builds canonical (simplified) trees
    def __add__(self, other):
        from .simplify import simplify

        return simplify(Add(self, as_expr(other)))

    def __radd__(self, other):
        return as_expr(other).__add__(self)

    def __sub__(self, other):
        from .simplify import simplify

        return simplify(Add(self, Mul(Const(-1), as_expr(other))))

    def __rsub__(self, other):
        return as_expr(other).__sub__(self)

    def __neg__(self):
        from .simplify import simplify

        return simplify(Mul(Const(-1), self))

    def __mul__(self, other):
        from .simplify import simplify

        return simplify(Mul(self, as_expr(other)))

    def __rmul__(self, other):
        return as_expr(other).__mul__(self)

    def __truediv__(self, other):
        from .simplify import simplify

        return simplify(Mul(self, Pow(as_expr(other), Const(-1))))

    def __rtruediv__(self, other):
        return as_expr(other).__truediv__(self)

    def __pow__(self, other):
        from .simplify import simplify

        return simplify(Pow(self, as_expr(other)))

    def __rpow__(self, other):
        return as_expr(other).__pow__(self)

    def __repr__(self):
        from .render import render

        return f"<{type(self).__name__} {render(self, 'plain')}>"

    def __str__(self):
        from .render import render

        return render(self, "plain")

    @property
    def children(self) -> tuple[Expr, ...]:
        return ()


def _set(obj, **kw):
    for k, v in kw.items():
        object.__setattr__(obj, k, v)


class Const(Expr):
    __slots__ = ("value",)
    _rank = 0

    def __init__(self, value):
        if isinstance(value, Const):
            value = value.value
        if isinstance(value, float):
            value = Fraction(value).limit_denominator(10**12)
        elif isinstance(value, str):
            value = Fraction(value)
        elif not isinstance(value, Rational):
            raise TypeError(f"Const needs an exact rational, got {value!r}")
        _set(self, value=Fraction(value))

    def _fields(self):
        return (self.value,)


class Sym(Expr):
    __slots__ = ("name",)
    _rank = 1

    def __init__(self, name: str):
        _set(self, name=name)

    def _fields(self):
        return (self.name,)


class Offset(Expr):
    """The interval offset ``(var - origin)`` kept as an opaque positive atom.

    Conformable kernels with a symbolic lower terminal produce powers of this
    atom; keeping it unexpanded lets the ``a -> b`` limit recognise which terms
    carry positive powers of the offset.
    """

    __slots__ = ("var", "origin")
    _rank = 2

    def __init__(self, var: str, origin: Expr):
        _set(self, var=var, origin=as_expr(origin))

    def _fields(self):
        return (self.var, self.origin)

    @property
    def children(self):
        return (self.origin,)


class Func(Expr):
    """Applied function ``name^(orders)(args)``.

    Dependent functions such as ``x(t)`` or ``phi(x, t)`` are ``Func`` nodes
    whose arguments are independent-variable symbols; ``orders`` counts the
    partial derivatives taken with respect to each argument slot.  Opaque
    potentials like ``U(x(t))`` use the same node with a non-symbol argument.
    """

    __slots__ = ("name", "args", "orders")
    _rank = 3

    def __init__(self, name: str, args, orders=None):
        args = tuple(as_expr(a) for a in args)
        orders = tuple(orders) if orders is not None else (0,) * len(args)
        if len(orders) != len(args):
            raise ValueError("one derivative order per argument")
        if any(o < 0 for o in orders):
            raise ValueError("negative derivative order")
        _set(self, name=name, args=args, orders=orders)

    def _fields(self):
        return (self.name, self.args, self.orders)

    @property
    def children(self):
        return self.args

    @property
    def base(self) -> Func:
        return Func(self.name, self.args)

    def derived(self, index: int, n: int = 1) -> Func:
        orders = list(self.orders)
        orders[index] += n
        return Func(self.name, self.args, orders)


class Add(Expr):
    __slots__ = ("terms",)
    _rank = 6

    def __init__(self, *terms):
        terms = tuple(as_expr(t) for t in terms)
        _set(self, terms=tuple(sorted(terms, key=sort_key)))

    def _fields(self):
        return self.terms

    @property
    def children(self):
        return self.terms


class Mul(Expr):
    __slots__ = ("factors",)
    _rank = 5

    def __init__(self, *factors):
        factors = tuple(as_expr(f) for f in factors)
        _set(self, factors=tuple(sorted(factors, key=sort_key)))

    def _fields(self):
        return self.factors

    @property
    def children(self):
        return self.factors


class Pow(Expr):
    __slots__ = ("base", "exp")
    _rank = 4

    def __init__(self, base, exp):
        _set(self, base=as_expr(base), exp=as_expr(exp))

    def _fields(self):
        return (self.base, self.exp)

    @property
    def children(self):
        return (self.base, self.exp)


class Deformed(Expr):
    """Kernel-deformed derivative ``D_k[var](arg)``; expanded only on request."""

    __slots__ = ("kernel", "var", "arg")
    _rank = 7

    def __init__(self, kernel, var: str, arg):
        _set(self, kernel=kernel, var=var, arg=as_expr(arg))

    def _fields(self):
        return (self.kernel, self.var, self.arg)

    @property
    def children(self):
        return (self.arg,) + tuple(self.kernel.params)


class Derivative(Expr):
    """Unevaluated ordinary derivative ``d^order/dvar^order (arg)``."""

    __slots__ = ("arg", "var", "order")
    _rank = 8

    def __init__(self, arg, var: str, order: int = 1):
        if order < 1:
            raise ValueError("derivative order must be positive")
        _set(self, arg=as_expr(arg), var=var, order=int(order))

    def _fields(self):
        return (self.arg, self.var, self.order)

    @property
    def children(self):
        return (self.arg,)


def sort_key(e: Expr) -> tuple:
    try:
        return e._key
    except AttributeError:
        pass
    if isinstance(e, Const):
        k = (0, e.value)
    elif isinstance(e, Sym):
        k = (1, e.name)
    elif isinstance(e, Offset):
        k = (2, e.var, sort_key(e.origin))
    elif isinstance(e, Func):
        k = (3, e.name, len(e.args), e.orders, tuple(sort_key(a) for a in e.args))
    elif isinstance(e, Pow):
        k = (4, sort_key(e.base), sort_key(e.exp))
    elif isinstance(e, Mul):
        k = (5, len(e.factors), tuple(sort_key(f) for f in e.factors))
    elif isinstance(e, Add):
        k = (6, len(e.terms), tuple(sort_key(t) for t in e.terms))
    elif isinstance(e, Deformed):
        k = (7, e.kernel.sort_key(), e.var, sort_key(e.arg))
    elif isinstance(e, Derivative):
        k = (8, e.var, e.order, sort_key(e.arg))
    else:  # pragma: no cover
        raise TypeError(type(e))
    object.__setattr__(e, "_key", k)
    return k


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction, float, str)) and not isinstance(value, bool):
        if isinstance(value, str):
            return Sym(value)
        return Const(value)
    raise TypeError(f"cannot convert {value!r} to Expr")


#: Euler's number, reserved so that ``exp(u)`` is the power ``E**u``.
E = Sym("%e")
ZERO = Const(0)
ONE = Const(1)
HALF = Const(Fraction(1, 2))


def sym(*names: str):
    out = tuple(Sym(n) for n in names)
    return out[0] if len(out) == 1 else out


def func(name: str, *args) -> Func:
    return Func(name, tuple(Sym(a) if isinstance(a, str) else a for a in args))


def exp(u) -> Expr:
    return E ** as_expr(u)


def log(u) -> Expr:
    from .simplify import simplify

    return simplify(Func("log", (as_expr(u),)))


def sqrt(u) -> Expr:
    return as_expr(u) ** HALF
