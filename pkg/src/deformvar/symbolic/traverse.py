"""Generic tree walking: free names, node search, structural replacement."""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Iterator

from .expr import Add, Const, Deformed, Derivative, Expr, Func, Mul, Offset, Pow, Sym, E


def rebuild(e: Expr, children: tuple[Expr, ...]) -> Expr:
    """Return a node of the same kind as ``e`` with new children."""
    if isinstance(e, (Const, Sym)):
        return e
    if isinstance(e, Offset):
        return Offset(e.var, children[0])
    if isinstance(e, Func):
        return Func(e.name, children, e.orders)
    if isinstance(e, Add):
        return Add(*children)
    if isinstance(e, Mul):
        return Mul(*children)
    if isinstance(e, Pow):
        return Pow(children[0], children[1])
    if isinstance(e, Deformed):
        kernel = e.kernel.with_params(children[1:]) if len(children) > 1 else e.kernel
        return Deformed(kernel, e.var, children[0])
    if isinstance(e, Derivative):
        return Derivative(children[0], e.var, e.order)
    raise TypeError(type(e))  # pragma: no cover


def walk(e: Expr) -> Iterator[Expr]:
    """Pre-order traversal."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children))


@lru_cache(maxsize=None)
def free_names(e: Expr) -> frozenset[str]:
    """Names of every symbol the value of ``e`` may depend on.

    Includes independent variables reached through function arguments, the
    variable of an offset, and the differentiation variable of operators.
    """
    if isinstance(e, Sym):
        return frozenset() if e is E or e == E else frozenset({e.name})
    if isinstance(e, Const):
        return frozenset()
    out = set()
    for c in e.children:
        out |= free_names(c)
    if isinstance(e, Offset):
        out.add(e.var)
    elif isinstance(e, (Deformed, Derivative)):
        out.add(e.var)
    return frozenset(out)


def depends_on(e: Expr, name: str) -> bool:
    return name in free_names(e)


@lru_cache(maxsize=None)
def has_operator(e: Expr) -> bool:
    """True if ``e`` contains an unevaluated deformed or ordinary derivative node."""
    if isinstance(e, (Deformed, Derivative)):
        return True
    return any(has_operator(c) for c in e.children)


def find(e: Expr, pred: Callable[[Expr], bool]) -> list[Expr]:
    seen = []
    for node in walk(e):
        if pred(node) and node not in seen:
            seen.append(node)
    return seen


def replace(e: Expr, mapping: dict[Expr, Expr]) -> Expr:
    """Top-down structural replacement; replaced nodes are not revisited."""
    if not mapping:
        return e
    memo: dict[Expr, Expr] = {}

    def go(node: Expr) -> Expr:
        hit = mapping.get(node)
        if hit is not None:
            return hit
        if node in memo:
            return memo[node]
        kids = node.children
        if not kids:
            out = node
        else:
            new = tuple(go(c) for c in kids)
            out = node if new == kids else rebuild(node, new)
        memo[node] = out
        return out

    return go(e)


def transform(e: Expr, fn: Callable[[Expr], Expr | None]) -> Expr:
    """Bottom-up rewrite: ``fn`` returns a replacement or ``None`` to keep."""
    memo: dict[Expr, Expr] = {}

    def go(node: Expr) -> Expr:
        if node in memo:
            return memo[node]
        kids = node.children
        if kids:
            new = tuple(go(c) for c in kids)
            cur = node if new == kids else rebuild(node, new)
        else:
            cur = node
        out = fn(cur)
        out = cur if out is None else out
        memo[node] = out
        return out

    return go(e)
