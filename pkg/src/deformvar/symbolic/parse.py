"""Expression parser.

Infix grammar (EBNF)::

    expr     = term { ("+" | "-") term } ;
    term     = unary { ("*" | "/") unary } ;
    unary    = "-" unary | "+" unary | power ;
    power    = atom [ "^" unary ] ;
    atom     = number | "(" expr ")" | deformed | deriv | call | name ;
    deformed = "D" "[" kernel "," name "]" "(" expr ")" ;
    kernel   = "conf" "(" expr "," expr ")" | "lexp" "(" expr ")"
             | "lexp2" "(" expr ")" | "haus" "(" expr "," expr ")" | "id" ;
    deriv    = "d" "(" expr "," name [ "," integer ] ")"
             | "d/d" name "(" expr ")" ;
    call     = name { "'" } "(" expr { "," expr } ")"
             | name "[" integer { "," integer } "]" "(" expr { "," expr } ")" ;

``exp``, ``log``, ``sin``, ``cos`` and ``sqrt`` are built in.  Decimal
literals are read as exact fractions.  A bare name that is differentiated
(``d(x,t)``, ``D[k,t](x)``) is promoted to a dependent function ``x(t)``
everywhere in the expression.

The s-expression form produced by ``render(e, "sexpr")`` is recognised
automatically and rebuilt node for node.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import ParseError
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
    Offset,
    Pow,
    Sym,
)
from .simplify import simplify
from .traverse import replace, transform, walk

__all__ = ["parse", "parse_sexpr", "parse_kernel"]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*|\.\d+|\d+)|(?P<name>[A-Za-z_%][A-Za-z0-9_]*)|(?P<op>[-+*/^()\[\],']))"
)

_SEXPR_HEADS = ("const", "sym", "add", "mul", "pow", "fn", "offset", "deformed", "deriv")


def _tokenize(s: str):
    pos = 0
    out = []
    while pos < len(s):
        if s[pos:].strip() == "":
            break
        m = _TOKEN.match(s, pos)
        if not m or m.end() == pos:
            bad = len(s) - len(s[pos:].lstrip())
            raise ParseError(f"unexpected character {s[bad]!r}", bad)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", len(s)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.promoted: dict[str, tuple[str, ...]] = {}

    # token helpers
    def peek(self, k: int = 0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def accept(self, value: str) -> bool:
        if self.peek()[1] == value and self.peek()[0] != "end":
            self.i += 1
            return True
        return False

    def expect(self, value: str):
        kind, v, pos = self.peek()
        if v != value or kind == "end":
            got = "end of input" if kind == "end" else repr(v)
            raise ParseError(f"expected {value!r}, got {got}", pos)
        self.i += 1

    def name(self) -> str:
        kind, v, pos = self.next()
        if kind != "name":
            raise ParseError(f"expected a name, got {v or 'end of input'!r}", pos)
        return v

    def integer(self) -> int:
        kind, v, pos = self.next()
        if kind != "num" or not v.isdigit():
            raise ParseError(f"expected an integer, got {v!r}", pos)
        return int(v)

    # grammar
    def parse(self) -> Expr:
        e = self.expr()
        kind, v, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {v!r}", pos)
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while True:
            if self.accept("+"):
                terms.append(self.term())
            elif self.accept("-"):
                terms.append(Mul(Const(-1), self.term()))
            else:
                break
        return terms[0] if len(terms) == 1 else Add(*terms)

    def term(self) -> Expr:
        factors = [self.unary()]
        while True:
            if self.accept("*"):
                factors.append(self.unary())
            elif self.peek()[1] == "/" and self.peek()[0] == "op":
                self.next()
                factors.append(Pow(self.unary(), Const(-1)))
            else:
                break
        return factors[0] if len(factors) == 1 else Mul(*factors)

    def unary(self) -> Expr:
        if self.accept("-"):
            return Mul(Const(-1), self.unary())
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.accept("^"):
            return Pow(base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, v, pos = self.peek()
        if kind == "num":
            self.next()
            return Const(Fraction(v))
        if v == "(" and kind == "op":
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        if kind != "name":
            raise ParseError(f"unexpected {'end of input' if kind == 'end' else repr(v)}", pos)
        if v == "D" and self.peek(1)[1] == "[":
            return self.deformed()
        if v == "d" and self.peek(1)[1] == "(":
            return self.deriv_call()
        if (v == "d" and self.peek(1)[1] == "/" and self.peek(2)[0] == "name"
                and self.peek(2)[1].startswith("d") and len(self.peek(2)[1]) > 1
                and self.peek(3)[1] == "("):
            self.i += 2
            var = self.next()[1][1:]
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return Derivative(self.promote(arg, var), var, 1)
        self.next()
        primes = 0
        while self.accept("'"):
            primes += 1
        if self.peek()[1] == "[" and self.peek()[0] == "op":
            self.next()
            orders = [self.integer()]
            while self.accept(","):
                orders.append(self.integer())
            self.expect("]")
            args = self.arglist()
            if len(orders) != len(args):
                raise ParseError(f"{v}: {len(orders)} orders for {len(args)} arguments", pos)
            return Func(v, args, orders)
        if self.peek()[1] == "(" and self.peek()[0] == "op":
            args = self.arglist()
            return self.call(v, args, primes, pos)
        if primes:
            raise ParseError(f"primed name {v!r} needs an argument list", pos)
        if v == "exp":
            raise ParseError("exp needs an argument", pos)
        return Sym(v)

    def arglist(self) -> list[Expr]:
        self.expect("(")
        args = [self.expr()]
        while self.accept(","):
            args.append(self.expr())
        self.expect(")")
        return args

    def call(self, name: str, args: list[Expr], primes: int, pos: int) -> Expr:
        builtin = name in ("exp", "log", "sin", "cos", "sqrt")
        if builtin:
            if len(args) != 1:
                raise ParseError(f"{name} takes one argument", pos)
            if primes:
                raise ParseError(f"cannot prime builtin {name}", pos)
            if name == "exp":
                return Pow(E, args[0])
            if name == "sqrt":
                return Pow(args[0], HALF)
            return Func(name, args)
        if primes and len(args) != 1:
            raise ParseError("primes are only allowed on one-argument functions", pos)
        return Func(name, args, [primes] if primes else None)

    def deformed(self) -> Expr:
        self.next()
        self.expect("[")
        kernel = self.kernel()
        self.expect(",")
        var = self.name()
        self.expect("]")
        self.expect("(")
        arg = self.expr()
        self.expect(")")
        return Deformed(kernel, var, self.promote(arg, var))

    def kernel(self):
        from ..kernels import BadKernel, ConformableInterval, Hausdorff, Identity, LambdaExp

        kind, v, pos = self.peek()
        name = self.name()
        try:
            if name == "id":
                return Identity()
            if name == "conf":
                a = self.arglist()
                if len(a) == 1:
                    return ConformableInterval(simplify(a[0]))
                if len(a) != 2:
                    raise ParseError("conf takes (alpha, origin)", pos)
                return ConformableInterval(simplify(a[0]), simplify(a[1]))
            if name in ("lexp", "lexp2"):
                a = self.arglist()
                if len(a) != 1:
                    raise ParseError(f"{name} takes one argument", pos)
                return LambdaExp(simplify(a[0]), halved=name == "lexp2")
            if name == "haus":
                a = self.arglist()
                if len(a) != 2:
                    raise ParseError("haus takes (alpha, l0)", pos)
                return Hausdorff(simplify(a[0]), simplify(a[1]))
        except BadKernel as exc:
            raise ParseError(str(exc), pos) from None
        raise ParseError(f"unknown kernel {name!r}", pos)

    def deriv_call(self) -> Expr:
        self.next()
        self.expect("(")
        arg = self.expr()
        self.expect(",")
        var = self.name()
        order = 1
        if self.accept(","):
            _, _, pos = self.peek()
            order = self.integer()
            if order < 1:
                raise ParseError("derivative order must be positive", pos)
        self.expect(")")
        return Derivative(self.promote(arg, var), var, order)

    def promote(self, arg: Expr, var: str) -> Expr:
        if isinstance(arg, Sym) and arg != E and arg.name != var:
            prev = self.promoted.get(arg.name)
            if prev is None:
                self.promoted[arg.name] = (var,)
            elif var not in prev:
                self.promoted[arg.name] = prev + (var,)
        return arg


def parse(
    s: str,
    functions: Mapping[str, Sequence[str]] | None = None,
    offsets: Sequence[tuple[str, str]] = (),
) -> Expr:
    """Parse infix or s-expression text into a canonical expression.

    ``functions`` maps bare names to the independent variables they depend on,
    e.g. ``{"x": ["t"]}`` turns every ``x`` into ``x(t)``.  Each ``(var,
    origin)`` pair in ``offsets`` makes a literal ``(var - origin)`` an interval
    offset atom, the form produced by conformable kernels.
    """
    if not isinstance(s, str):
        raise ParseError("expression text must be a string")
    stripped = s.lstrip()
    if stripped.startswith("("):
        head = stripped[1:].split(None, 1)[0] if len(stripped) > 1 else ""
        if head in _SEXPR_HEADS:
            return parse_sexpr(s)
    p = _Parser(s)
    raw = p.parse()
    promoted = dict(p.promoted)
    for name, vars_ in (functions or {}).items():
        promoted[name] = tuple(vars_)
    if promoted:
        names = {n.name for n in walk(raw) if isinstance(n, Sym)}
        mapping = {
            Sym(name): Func(name, tuple(Sym(v) for v in vars_))
            for name, vars_ in promoted.items()
            if name in names
        }
        raw = replace(raw, mapping)
    if offsets:
        raw = _mark_offsets(raw, offsets)
    return simplify(raw)


def _mark_offsets(raw: Expr, offsets) -> Expr:
    patterns = {
        frozenset({Sym(v), Mul(Const(-1), Sym(o))}): Offset(v, Sym(o)) for v, o in offsets
    }

    def rule(node):
        if isinstance(node, Add) and len(node.terms) == 2:
            return patterns.get(frozenset(node.terms))
        return None

    return transform(raw, rule)


def parse_kernel(s: str):
    """Parse kernel syntax such as ``conf(1/2,a)`` or ``lexp2(lambda)``."""
    p = _Parser(s)
    k = p.kernel()
    kind, v, pos = p.peek()
    if kind != "end":
        raise ParseError(f"unexpected token {v!r}", pos)
    return k


# s-expressions ------------------------------------------------------------

_SX_TOKEN = re.compile(r"\s*(\(|\)|[^\s()]+)")


def parse_sexpr(s: str) -> Expr:
    """Rebuild the exact tree written by ``render(e, "sexpr")``."""
    toks = []
    pos = 0
    while pos < len(s):
        m = _SX_TOKEN.match(s, pos)
        if not m:
            if s[pos:].strip() == "":
                break
            raise ParseError("bad s-expression", pos)
        toks.append((m.group(1), m.start(1)))
        pos = m.end()

    def read(i):
        tok, p = toks[i] if i < len(toks) else ("", len(s))
        if tok == "(":
            items = []
            i += 1
            while i < len(toks) and toks[i][0] != ")":
                item, i = read(i)
                items.append(item)
            if i >= len(toks):
                raise ParseError("unbalanced parentheses", len(s))
            return (items, p), i + 1
        if tok in (")", ""):
            raise ParseError("unexpected ')'" if tok else "unexpected end", p)
        return (tok, p), i + 1

    tree, end = read(0)
    if end != len(toks):
        raise ParseError("trailing input", toks[end][1])
    return _build(tree)


def _build(node) -> Expr:
    items, pos = node
    if not isinstance(items, list) or not items or isinstance(items[0][0], list):
        raise ParseError("expected a tagged list", pos)
    head = items[0][0]
    rest = items[1:]
    try:
        if head == "const":
            return Const(Fraction(rest[0][0]))
        if head == "sym":
            return Sym(rest[0][0])
        if head == "add":
            return Add(*(_build(r) for r in rest))
        if head == "mul":
            return Mul(*(_build(r) for r in rest))
        if head == "pow":
            return Pow(_build(rest[0]), _build(rest[1]))
        if head == "fn":
            orders = [int(o[0]) for o in rest[1][0]]
            return Func(rest[0][0], [_build(r) for r in rest[2:]], orders)
        if head == "offset":
            return Offset(rest[0][0], _build(rest[1]))
        if head == "deformed":
            return Deformed(_build_kernel(rest[0]), rest[1][0], _build(rest[2]))
        if head == "deriv":
            return Derivative(_build(rest[2]), rest[0][0], int(rest[1][0]))
    except (IndexError, ValueError, TypeError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"malformed ({head} ...): {exc}", pos) from None
    raise ParseError(f"unknown s-expression head {head!r}", pos)


def _build_kernel(node):
    from ..kernels import ConformableInterval, Hausdorff, Identity, LambdaExp

    items, pos = node
    head = items[0][0]
    params = [_build(r) for r in items[1:]]
    if head == "id":
        return Identity()
    if head == "conf":
        return ConformableInterval(*params)
    if head == "lexp":
        return LambdaExp(params[0])
    if head == "lexp2":
        return LambdaExp(params[0], halved=True)
    if head == "haus":
        return Hausdorff(*params)
    raise ParseError(f"unknown kernel {head!r}", pos)
