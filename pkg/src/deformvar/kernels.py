"""Kernel family of the local deformed derivative ``D_k f = k(x) f'(x)``."""

from __future__ import annotations

from fractions import Fraction
from dataclasses import dataclass, fields, replace as dc_replace
from typing import Callable, ClassVar, Mapping

from .symbolic.expr import (
    Add,
    Const,
    Deformed,
    Derivative,
    E,
    Expr,
    Mul,
    ONE,
    Offset,
    Pow,
    Sym,
    ZERO,
    as_expr,
    sort_key,
)
from .symbolic.simplify import simplify
from .symbolic.traverse import has_operator, transform
from .symbolic.errors import EvalSingularity

__all__ = [
    "Kernel",
    "ConformableInterval",
    "LambdaExp",
    "Hausdorff",
    "Identity",
    "kernel_factor",
    "expand_deformed",
    "eval_deformed_numeric",
    "BadKernel",
]


class BadKernel(ValueError):
    """Kernel parameters outside their admissible range."""


def _coerce(obj):
    for f in fields(obj):
        if f.type == "Expr":
            object.__setattr__(obj, f.name, simplify(as_expr(getattr(obj, f.name))))


class Kernel:
    """Common protocol: ``params``, ``with_params``, ``factor``, ``text``."""

    tag: ClassVar[str] = "?"

    @property
    def params(self) -> tuple[Expr, ...]:
        return tuple(getattr(self, f.name) for f in fields(self) if f.type == "Expr")

    def with_params(self, params) -> "Kernel":
        names = [f.name for f in fields(self) if f.type == "Expr"]
        return dc_replace(self, **dict(zip(names, params)))

    def sort_key(self) -> tuple:
        return (self.tag,) + tuple(sort_key(p) for p in self.params)

    def factor(self, var: str) -> Expr:
        raise NotImplementedError

    def text(self) -> str:
        from .symbolic.render import render

        if not self.params:
            return self.tag
        return f"{self.tag}({','.join(render(p, 'plain') for p in self.params)})"

    def sexpr(self) -> str:
        from .symbolic.render import render

        inner = " ".join([self.tag] + [render(p, "sexpr") for p in self.params])
        return f"({inner})"

    def is_singular_at_origin(self) -> bool:
        return False

    def __str__(self):
        return self.text()


def _check_alpha(alpha: Expr, kind: str):
    if isinstance(alpha, Const) and not (0 < alpha.value <= 1):
        raise BadKernel(f"{kind} kernel needs 0 < alpha <= 1, got {alpha.value}")


@dataclass(frozen=True)
class ConformableInterval(Kernel):
    """``k(x) = (x - a)^(1 - alpha)``; ``a = 0`` gives the plain conformable kernel."""

    alpha: Expr
    origin: Expr = ZERO
    tag: ClassVar[str] = "conf"

    def __post_init__(self):
        _coerce(self)
        _check_alpha(self.alpha, "conformable")

    def offset(self, var: str) -> Expr:
        if self.origin == ZERO:
            return Sym(var)
        return Offset(var, self.origin)

    def factor(self, var: str) -> Expr:
        return simplify(Pow(self.offset(var), Add(ONE, Mul(Const(-1), self.alpha))))

    def is_singular_at_origin(self) -> bool:
        return not (isinstance(self.alpha, Const) and self.alpha.value == 1)


@dataclass(frozen=True)
class LambdaExp(Kernel):
    """``k(t) = exp(-lambda t)``, or ``exp(-lambda t / 2)`` when ``halved``."""

    rate: Expr
    halved: bool = False

    def __post_init__(self):
        _coerce(self)

    @property
    def tag(self) -> str:  # type: ignore[override]
        return "lexp2" if self.halved else "lexp"

    def factor(self, var: str) -> Expr:
        scale = Const(Fraction(-1, 2)) if self.halved else Const(-1)
        return simplify(Pow(E, Mul(scale, self.rate, Sym(var))))


@dataclass(frozen=True)
class Hausdorff(Kernel):
    """``k(x) = l0 (1 + x/l0)^(1 - alpha)``."""

    alpha: Expr
    scale: Expr = ONE
    tag: ClassVar[str] = "haus"

    def __post_init__(self):
        _coerce(self)
        _check_alpha(self.alpha, "Hausdorff")
        if isinstance(self.scale, Const) and self.scale.value <= 0:
            raise BadKernel("Hausdorff length scale must be positive")

    def factor(self, var: str) -> Expr:
        inner = Add(ONE, Mul(Sym(var), Pow(self.scale, Const(-1))))
        return simplify(Mul(self.scale, Pow(inner, Add(ONE, Mul(Const(-1), self.alpha)))))


@dataclass(frozen=True)
class Identity(Kernel):
    """``k = 1``: the ordinary derivative."""

    tag: ClassVar[str] = "id"

    def factor(self, var: str) -> Expr:
        return ONE


def kernel_factor(k: Kernel, var: str = "t") -> Expr:
    """Symbolic kernel ``k(var)``."""
    return k.factor(var)


def expand_deformed(e: Expr) -> Expr:
    """Rewrite every ``D_k[v](f)`` as ``k(v) * df/dv`` (innermost first) and simplify."""
    from .symbolic.calculus import differentiate

    e = as_expr(e)
    if not has_operator(e):
        return simplify(e)

    def rule(node: Expr):
        if isinstance(node, Deformed):
            return simplify(Mul(node.kernel.factor(node.var), differentiate(node.arg, node.var)))
        if isinstance(node, Derivative) and not has_operator(node.arg):
            return differentiate(node.arg, node.var, node.order)
        return None

    return simplify(transform(e, rule))


def eval_deformed_numeric(
    f: Callable[[float], float],
    k: Kernel,
    x: float,
    h: float = 1e-6,
    bindings: Mapping[str, float] | None = None,
    var: str = "t",
) -> float:
    """Forward limit quotient ``[f(x + h k(x)) - f(x)] / h``.

    Symbolic kernel parameters are looked up in ``bindings``.
    """
    from .symbolic.evaluate import evaluate

    if h <= 0:
        raise ValueError("h must be positive")
    env = dict(bindings or {})
    if k.is_singular_at_origin():
        origin = evaluate(k.origin, env) if k.origin != ZERO else 0.0
        alpha = evaluate(k.alpha, env)
        if alpha < 1 and x == origin:
            raise EvalSingularity(f"deformed quotient degenerates at {var} = {origin}")
    env[var] = x
    kx = evaluate(k.factor(var), env)
    return (f(x + h * kx) - f(x)) / h
