"""Deformed Euler-Lagrange equations, limit procedures and the Legendre map.

For a dependent function ``y`` the residual is assembled slot by slot::

    R = dL/dy
        + sum_o (-1)^|o| d^o [dL/d(y^(o))]          ordinary jets (Ostrogradsky)
        - sum_v d_v   [k_v(v) dL/d(D_v y)]           deformed slot
        + sum_v d_v^2 [k_v(v) dL/d(D_v d_v y)]       deformed slot of the first derivative

where the partials treat ``y``, each jet ``y^(o)``, ``D_v y`` and ``D_v(d_v y)``
as independent placeholders.  Deformed nodes that are not slots (for
instance ``D_t(P^mu)``) are expanded into jets before the partials are taken.
The outer operators are ordinary derivatives of the kernel-weighted partials.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .kernels import Kernel, expand_deformed
from .symbolic.calculus import differentiate, substitute
from .symbolic.equivalence import Equivalence, equivalent
from .symbolic.expr import (
    Add,
    Const,
    Deformed,
    Derivative,
    Expr,
    Func,
    Mul,
    ONE,
    Offset,
    Pow,
    Sym,
    ZERO,
    as_expr,
    sort_key,
)
from .symbolic.render import render
from .symbolic.simplify import factors_of, simplify, split_coeff, terms_of
from .symbolic.traverse import depends_on, find, free_names, has_operator, replace, transform, walk

__all__ = [
    "LagrangianSpec",
    "ELResult",
    "LimitStep",
    "EngineError",
    "UnknownVariable",
    "MissingKernel",
    "LimitSingular",
    "NonInvertibleMomentum",
    "euler_lagrange",
    "euler_lagrange_particle",
    "euler_lagrange_field",
    "euler_lagrange_system",
    "take_limit_interval",
    "take_limit_alpha",
    "apply_recipe",
    "legendre_transform",
    "legendre_round_trip",
    "hamilton_elimination",
    "match_residual",
    "orient_residual",
]


class EngineError(Exception):
    pass


class UnknownVariable(EngineError):
    pass


class MissingKernel(EngineError):
    pass


class LimitSingular(EngineError):
    pass


class NonInvertibleMomentum(EngineError):
    pass


def _as_function(v) -> Func:
    if isinstance(v, Func):
        return v
    raise TypeError(f"dynamical variables are dependent functions like x(t), got {v!r}")


@dataclass(frozen=True, eq=False)
class LagrangianSpec:
    """A Lagrangian with its dynamical variables and kernel assignment.

    ``kernels`` maps an independent variable to the kernel of every deformed
    derivative taken with respect to it.  ``sources`` names external functions
    (noise, forcing, fields) that are never varied; any other function that is
    not a dynamical variable is treated the same way.
    """

    L: Expr
    variables: tuple[Func, ...]
    kernels: Mapping[str, Kernel] = field(default_factory=dict)
    sources: tuple[str, ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "L", simplify(as_expr(self.L)))
        object.__setattr__(self, "variables", tuple(_as_function(v) for v in self.variables))
        for v in self.variables:
            if any(v.orders) or not all(isinstance(a, Sym) for a in v.args):
                raise UnknownVariable(f"{v} is not an undifferentiated dependent function")

    @property
    def independent(self) -> tuple[str, ...]:
        seen: list[str] = []
        for v in self.variables:
            for a in v.args:
                if a.name not in seen:
                    seen.append(a.name)
        return tuple(seen)

    def variable(self, y) -> Func:
        name = y.name if isinstance(y, Func) else str(y)
        for v in self.variables:
            if v.name == name:
                return v
        raise UnknownVariable(f"{name!r} is not a dynamical variable of this Lagrangian")

    def validate(self):
        for node in find(self.L, lambda n: isinstance(n, Deformed)):
            k = self.kernels.get(node.var)
            if k is None or k != node.kernel:
                raise MissingKernel(
                    f"deformed derivative D[{node.kernel.text()},{node.var}] has no matching "
                    f"kernel assignment"
                )
        return self


@dataclass
class ELResult:
    """Residual of one variable with its limit bookkeeping."""

    variable: str
    raw: Expr
    pre_limit: Expr
    post_limit: Expr
    dropped_terms: list[Expr] = field(default_factory=list)
    limits_applied: list[str] = field(default_factory=list)
    contributions: dict[str, Expr] = field(default_factory=dict)
    system: str = ""
    target: Expr | None = None
    verdict: str | None = None
    ratio: Expr | None = None

    def to_json(self) -> dict:
        def both(e):
            if e is None:
                return None
            return {"plain": render(e, "plain"), "latex": render(e, "latex"),
                    "sexpr": render(e, "sexpr")}

        return {
            "system": self.system,
            "variable": self.variable,
            "pre_limit": both(self.pre_limit),
            "post_limit": both(self.post_limit),
            "dropped_terms": [both(d) for d in self.dropped_terms],
            "limits_applied": list(self.limits_applied),
            "target": both(self.target),
            "verdict": self.verdict,
        }


# limit procedures ---------------------------------------------------------

def _offsets_for(e: Expr, interval) -> list[Offset]:
    offs = find(e, lambda n: isinstance(n, Offset))
    if interval is None:
        return offs
    if isinstance(interval, Offset):
        return [o for o in offs if o == interval]
    if isinstance(interval, tuple):
        var, origin = interval
        origin = simplify(as_expr(origin))
        return [o for o in offs if o.var == var and o.origin == origin]
    target = simplify(as_expr(interval))
    return [o for o in offs
            if simplify(Add(Sym(o.var), Mul(Const(-1), o.origin))) == target]


def _offset_power(term: Expr, off: Offset) -> Fraction | None:
    """Power of ``off`` in a monomial; ``None`` if not polynomial in it."""
    power = Fraction(0)
    for f in factors_of(term):
        if f == off:
            power += 1
        elif isinstance(f, Pow) and f.base == off:
            if not isinstance(f.exp, Const):
                return None
            power += f.exp.value
        elif any(n == off for n in walk(f)):
            return None
    return power


def _split_interval(e: Expr, interval=None, lenient: bool = False):
    e = simplify(e)
    if has_operator(e):
        e = expand_deformed(e)
    offs = _offsets_for(e, interval)
    if not offs:
        return e, []
    kept, dropped = [], []
    for t in terms_of(e):
        drop = False
        for off in offs:
            p = _offset_power(t, off)
            if p is None:
                if lenient:
                    continue
                raise LimitSingular(
                    f"term {render(t)} is not polynomial in {render(off)}")
            if p < 0:
                if lenient:
                    continue
                raise LimitSingular(
                    f"term {render(t)} carries a negative power of {render(off)}")
            if p > 0:
                drop = True
        (dropped if drop else kept).append(t)
    return simplify(Add(*kept)) if kept else ZERO, dropped


def take_limit_interval(e: Expr, interval=None, *, lenient: bool = False) -> Expr:
    """The ``a -> b`` limit: drop every term with a positive power of ``(x - a)``.

    ``interval`` selects the offset: an :class:`Offset`, an expression such as
    ``t - a``, a ``(var, origin)`` pair, or ``None`` for every offset present.
    """
    return _split_interval(e, interval, lenient)[0]


def take_limit_alpha(e: Expr, alpha="alpha") -> Expr:
    """The ``alpha -> 1`` limit by substitution."""
    a = alpha if isinstance(alpha, Sym) else Sym(str(alpha))
    out = simplify(replace(simplify(as_expr(e)), {a: ONE}))
    if has_operator(out):
        out = expand_deformed(out)
    return out


@dataclass(frozen=True)
class LimitStep:
    """One step of a limit recipe.

    kinds: ``interval`` (optionally ``lenient``), ``alpha`` (symbol name in
    ``target``), ``substitute`` (``target`` -> ``replacement``) and
    ``rewrite`` (``target`` is a callable, ``replacement`` its description).
    """

    kind: str
    target: object = None
    replacement: object = None
    lenient: bool = False

    def describe(self) -> str:
        if self.kind == "interval":
            what = "all offsets" if self.target is None else render(as_expr(self.target)) \
                if not isinstance(self.target, tuple) else f"{self.target[0]} - {self.target[1]}"
            return f"limit a->b ({what} -> 0{', lenient' if self.lenient else ''})"
        if self.kind == "alpha":
            return f"limit {self.target or 'alpha'} -> 1"
        if self.kind == "substitute":
            return f"substitute {render(as_expr(self.target))} -> {render(as_expr(self.replacement))}"
        if self.kind == "rewrite":
            return str(self.replacement or "rewrite")
        return self.kind

    def apply(self, e: Expr) -> tuple[Expr, list[Expr]]:
        if self.kind == "interval":
            return _split_interval(e, self.target, self.lenient)
        if self.kind == "alpha":
            return take_limit_alpha(e, self.target or "alpha"), []
        if self.kind == "substitute":
            return substitute(e, self.target, self.replacement), []
        if self.kind == "rewrite":
            return simplify(self.target(e)), []
        raise ValueError(f"unknown limit step {self.kind!r}")


INTERVAL = LimitStep("interval")


def apply_recipe(e: Expr, steps: Sequence[LimitStep]):
    """Run ``steps`` in order; returns (result, dropped terms, descriptions)."""
    dropped: list[Expr] = []
    applied: list[str] = []
    for s in steps:
        e, d = s.apply(e)
        dropped.extend(d)
        applied.append(s.describe())
    return e, dropped, applied


# residual assembly -------------------------------------------------------

def _is_slot(node: Deformed, y: Func) -> str | None:
    if node.arg == y:
        return "D"
    a = node.arg
    if isinstance(a, Func) and a.name == y.name and a.args == y.args:
        idx = [i for i, s in enumerate(y.args) if s.name == node.var]
        if idx and sum(a.orders) == 1 and a.orders[idx[0]] == 1:
            return "DD"
    return None


def _pre_expand(L: Expr, y: Func) -> Expr:
    """Expand deformed nodes that involve ``y`` but are not Euler-Lagrange slots."""
    def rule(node):
        if isinstance(node, Deformed) and _is_slot(node, y) is None and _mentions(node.arg, y):
            return simplify(Mul(node.kernel.factor(node.var), differentiate(node.arg, node.var)))
        return None

    return simplify(transform(L, rule))


def _mentions(e: Expr, y: Func) -> bool:
    return any(isinstance(n, Func) and n.name == y.name and n.args == y.args for n in walk(e))


def _order_label(y: Func, orders) -> str:
    return "d^(" + ",".join(f"{a.name}{o}" for a, o in zip(y.args, orders) if o) + ")"


def euler_lagrange(spec: LagrangianSpec, y, limits: Sequence[LimitStep] | None = (INTERVAL,),
                   system: str = "") -> ELResult:
    """Residual of the deformed Euler-Lagrange equation for ``y``.

    ``limits`` is the recipe applied to the expanded residual; pass ``()`` to
    keep the pre-limit form.
    """
    spec.validate()
    y = spec.variable(y)
    L = _pre_expand(spec.L, y)

    mapping: dict[Expr, Sym] = {}
    info: dict[Sym, tuple] = {}

    deformed = find(L, lambda n: isinstance(n, Deformed) and _is_slot(n, y) is not None)
    deformed.sort(key=sort_key)
    for i, node in enumerate(deformed):
        kind = _is_slot(node, y)
        ph = Sym(f"%{kind}{i}")
        mapping[node] = ph
        info[ph] = (kind, node)
    jets = find(L, lambda n: isinstance(n, Func) and n.name == y.name and n.args == y.args)
    jets.sort(key=sort_key)
    for i, j in enumerate(jets):
        ph = Sym(f"%j{i}")
        mapping[j] = ph
        info[ph] = ("J", j)
    if y not in mapping:
        mapping[y] = Sym("%y")
        info[mapping[y]] = ("J", y)

    Lp = simplify(replace(L, mapping))
    back = {ph: node for node, ph in mapping.items()}

    contributions: dict[str, Expr] = {}
    total: list[Expr] = []
    for ph, (kind, node) in sorted(info.items(), key=lambda kv: sort_key(kv[1][1])):
        partial = simplify(replace(differentiate(Lp, ph), back))
        if partial == ZERO:
            continue
        if kind == "J":
            term = partial
            for a, o in zip(node.args, node.orders):
                if o:
                    term = differentiate(term, a.name, o)
            sign = -1 if sum(node.orders) % 2 else 1
            term = simplify(Mul(Const(sign), term))
            label = "dL/dy" if not any(node.orders) else _order_label(node, node.orders)
        elif kind == "D":
            weighted = simplify(Mul(node.kernel.factor(node.var), partial))
            term = simplify(Mul(Const(-1), differentiate(weighted, node.var)))
            label = f"D[{node.kernel.text()},{node.var}]"
        else:
            weighted = simplify(Mul(node.kernel.factor(node.var), partial))
            term = differentiate(weighted, node.var, 2)
            label = f"D[{node.kernel.text()},{node.var}](d{node.var})"
        contributions[label] = contributions.get(label, ZERO) + term
        total.append(term)

    raw = simplify(Add(*total)) if total else ZERO
    pre = expand_deformed(raw)
    post, dropped, applied = apply_recipe(pre, limits or ())
    return ELResult(
        variable=y.name,
        raw=raw,
        pre_limit=pre,
        post_limit=post,
        dropped_terms=dropped,
        limits_applied=applied,
        contributions=contributions,
        system=system or spec.name,
    )


def euler_lagrange_particle(spec: LagrangianSpec, y, limits=(INTERVAL,)) -> ELResult:
    """Particle path: ``y`` depends on a single independent variable."""
    v = spec.variable(y)
    if len(v.args) != 1:
        raise UnknownVariable(f"{v} is a field; use euler_lagrange_field")
    return euler_lagrange(spec, v, limits)


def euler_lagrange_field(spec: LagrangianSpec, phi, limits=(INTERVAL,)) -> ELResult:
    """Field path: the residual is summed over every coordinate of ``phi``."""
    v = spec.variable(phi)
    if len(v.args) < 1:
        raise UnknownVariable(f"{v} has no independent variables")
    return euler_lagrange(spec, v, limits)


def euler_lagrange_system(spec: LagrangianSpec, limits=(INTERVAL,)) -> list[ELResult]:
    """One particle-path residual per dynamical variable."""
    if len(spec.variables) < 2:
        raise UnknownVariable("a system needs at least two dynamical variables")
    return [euler_lagrange(spec, v, limits) for v in spec.variables]


# matching ---------------------------------------------------------------

def _is_dynamic_factor(f: Expr, dyn) -> bool:
    return any((isinstance(n, Func) and n.name in dyn) or isinstance(n, Offset) for n in walk(f))


def _shapes(e: Expr, dyn) -> dict[Expr, Expr]:
    """Group terms by their dynamical part; values are the summed coefficients."""
    out: dict[Expr, list[Expr]] = {}
    for t in terms_of(e):
        shape, coeff = [], []
        for f in factors_of(t):
            (shape if _is_dynamic_factor(f, dyn) else coeff).append(f)
        key = simplify(Mul(*shape)) if shape else ONE
        out.setdefault(key, []).append(Mul(*coeff) if coeff else ONE)
    return {k: simplify(Add(*v)) for k, v in out.items()}


def _shape_rank(shape: Expr, dyn):
    orders = [sum(n.orders) for n in walk(shape) if isinstance(n, Func) and n.name in dyn]
    offsets = sum(1 for n in walk(shape) if isinstance(n, Offset))
    return (-max(orders, default=-1), offsets, len(factors_of(shape)), sort_key(shape))


def match_residual(R: Expr, T: Expr, dynamic: Iterable[str], exact: bool = False,
                   seed: int = 0) -> tuple[Equivalence, Expr]:
    """Is ``R = c * T`` for a nonzero factor ``c`` free of dynamical functions?

    Terms are grouped by their dynamical part (factors holding a dynamical
    function or an interval offset).  ``c`` is the coefficient ratio of the
    group with the highest derivative order.  With ``exact`` ``c`` is 1.
    """
    dyn = set(dynamic)
    R = expand_deformed(R)
    T = expand_deformed(T)
    ratio: Expr = ONE
    if not exact:
        sT = _shapes(T, dyn)
        sR = _shapes(R, dyn)
        ranked = sorted((k for k in sT if sT[k] != ZERO), key=lambda k: _shape_rank(k, dyn))
        if ranked:
            lead = ranked[0]
            cand = simplify(Mul(sR.get(lead, ZERO), Pow(sT[lead], Const(-1))))
            if cand != ZERO:
                ratio = cand
    verdict = equivalent(R, simplify(Mul(ratio, T)), seed=seed)
    verdict.difference = simplify(Add(R, Mul(Const(-1), ratio, T)))
    return verdict, ratio


def orient_residual(e: Expr, dynamic: Iterable[str]) -> Expr:
    """Flip the overall sign so the highest-derivative group reads positive."""
    dyn = set(dynamic)
    shapes = {k: v for k, v in _shapes(e, dyn).items() if v != ZERO}
    if not shapes:
        return e
    lead = min(shapes, key=lambda k: _shape_rank(k, dyn))
    c, _ = split_coeff(terms_of(shapes[lead])[0])
    return simplify(Mul(Const(-1), e)) if c < 0 else e


# Legendre transform -----------------------------------------------------

def _momentum_slot(spec: LagrangianSpec, q: Func):
    slots = find(spec.L, lambda n: isinstance(n, Deformed) and n.arg == q)
    if len(slots) > 1:
        raise NonInvertibleMomentum("several deformed derivatives of the coordinate")
    if slots:
        node = slots[0]
        return node, node.kernel.factor(node.var), node.var
    (t,) = q.args
    return q.derived(0), ONE, t.name


def legendre_transform(spec: LagrangianSpec, q, p: str = "p", coordinate: str = "q") -> Expr:
    """Hamiltonian ``H = p_k s - L`` with ``s = D_k q`` eliminated.

    ``p_k = dL/ds`` must be affine in ``s`` (``p_k = A s + B`` with ``A``
    nonzero and free of ``s``).  The deformed velocity is rewritten as
    ``s = k(t) (p - B) / A``, i.e. ``D_k q = k(t) q'`` with ``q' = p/m``.
    The result is written in the symbols ``coordinate`` and ``p``.
    """
    q = spec.variable(q)
    slot, k, _ = _momentum_slot(spec, q)
    s = Sym("%s")
    Lp = simplify(replace(spec.L, {slot: s}))
    if any(isinstance(n, Func) and n.name == q.name and any(n.orders) for n in walk(Lp)):
        raise NonInvertibleMomentum("L depends on the velocity outside the momentum slot")
    pk = differentiate(Lp, s)
    A = differentiate(pk, s)
    if A == ZERO or depends_on(A, s.name):
        raise NonInvertibleMomentum("conjugate momentum is not invertible for the deformed velocity")
    B = simplify(replace(pk, {s: ZERO}))
    P = Sym(p)
    s_star = simplify(Mul(k, Add(P, Mul(Const(-1), B)), Pow(A, Const(-1))))
    H = simplify(replace(simplify(Add(Mul(pk, s), Mul(Const(-1), Lp))), {s: s_star}))
    return simplify(replace(H, {q: Sym(coordinate)}))


def legendre_round_trip(spec: LagrangianSpec, q, H: Expr, p: str = "p",
                        coordinate: str = "q") -> bool:
    """``p_k s - H`` with ``p`` expressed through ``s`` gives back ``L``."""
    q = spec.variable(q)
    slot, k, _ = _momentum_slot(spec, q)
    s = Sym("%s")
    Lp = simplify(replace(spec.L, {slot: s, q: Sym(coordinate)}))
    pk = differentiate(Lp, s)
    A = differentiate(pk, s)
    B = simplify(replace(pk, {s: ZERO}))
    p_of_s = simplify(Add(Mul(A, s, Pow(k, Const(-1))), B))
    back = simplify(Add(Mul(pk, s), Mul(Const(-1), replace(H, {Sym(p): p_of_s}))))
    return simplify(Add(back, Mul(Const(-1), Lp))) == ZERO


def hamilton_elimination(H: Expr, q: str = "q", p: str = "p", t: str = "t") -> Expr:
    """Second-order equation for ``q(t)`` from Hamilton's equations.

    ``q' = dH/dp`` is solved for ``p`` (it must be affine in ``p``) and the
    result is put into ``p' + dH/dq``.
    """
    Q, P = Sym(q), Sym(p)
    qf = Func(q, (Sym(t),))
    dHdp = differentiate(H, P)
    c = differentiate(dHdp, P)
    if c == ZERO or depends_on(c, p):
        raise NonInvertibleMomentum("dH/dp is not affine in p")
    d = simplify(replace(dHdp, {P: ZERO}))
    qdot = qf.derived(0)
    p_t = simplify(Mul(Add(qdot, Mul(Const(-1), replace(d, {Q: qf}))),
                       Pow(replace(c, {Q: qf}), Const(-1))))
    dHdq = simplify(replace(differentiate(H, Q), {Q: qf}))
    return simplify(Add(differentiate(p_t, t), replace(dHdq, {P: p_t})))
