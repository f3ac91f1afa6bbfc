"""Text renderings: plain infix, LaTeX, and a lossless s-expression form."""

from __future__ import annotations

from fractions import Fraction

from .expr import Add, Const, Deformed, Derivative, E, Expr, Func, Mul, Offset, Pow, Sym

__all__ = ["render"]

_GREEK = {
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "kappa",
    "lambda", "mu", "nu", "xi", "pi", "rho", "sigma", "tau", "phi", "chi", "psi",
    "omega", "Gamma", "Delta", "Theta", "Lambda", "Phi", "Psi", "Omega",
}


def render(e: Expr, format: str = "plain") -> str:
    if format == "plain":
        return _plain(e)
    if format == "latex":
        return _latex(e)
    if format == "sexpr":
        return _sexpr(e)
    raise ValueError(f"unknown format {format!r}")


# plain ------------------------------------------------------------------

_PREC_ADD, _PREC_MUL, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4


def _frac_plain(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _prec(e: Expr) -> int:
    if isinstance(e, Add):
        return _PREC_ADD
    if isinstance(e, Mul):
        return _PREC_MUL
    if isinstance(e, Const):
        if e.value < 0:
            return _PREC_ADD
        return _PREC_ATOM if e.value.denominator == 1 else _PREC_MUL
    if isinstance(e, Pow):
        return _PREC_ATOM if e.base == E else _PREC_POW
    if isinstance(e, Offset):
        return _PREC_ATOM
    return _PREC_ATOM


def _wrap(e: Expr, min_prec: int) -> str:
    s = _plain(e)
    return f"({s})" if _prec(e) < min_prec else s


def _neg_split(term: Expr) -> tuple[bool, Expr]:
    if isinstance(term, Const) and term.value < 0:
        return True, Const(-term.value)
    if isinstance(term, Mul) and isinstance(term.factors[0], Const) and term.factors[0].value < 0:
        c = -term.factors[0].value
        rest = term.factors[1:]
        if c == 1:
            return True, rest[0] if len(rest) == 1 else Mul(*rest)
        return True, Mul(Const(c), *rest)
    return False, term


def _func_plain(e: Func) -> str:
    args = ",".join(_plain(a) for a in e.args)
    if len(e.args) == 1:
        return f"{e.name}{chr(39) * e.orders[0]}({args})"
    if any(e.orders):
        return f"{e.name}[{','.join(map(str, e.orders))}]({args})"
    return f"{e.name}({args})"


def _plain(e: Expr) -> str:
    if isinstance(e, Const):
        return _frac_plain(e.value)
    if isinstance(e, Sym):
        return "exp(1)" if e == E else e.name
    if isinstance(e, Offset):
        return f"({e.var} - {_wrap(e.origin, _PREC_MUL)})"
    if isinstance(e, Func):
        return _func_plain(e)
    if isinstance(e, Add):
        out = []
        for i, t in enumerate(e.terms):
            neg, mag = _neg_split(t)
            body = _wrap(mag, _PREC_MUL) if isinstance(mag, Add) else _plain(mag)
            if i == 0:
                out.append(("-" if neg else "") + body)
            else:
                out.append((" - " if neg else " + ") + body)
        return "".join(out)
    if isinstance(e, Mul):
        neg, mag = _neg_split(e)
        if neg:
            return "-" + _wrap(mag, _PREC_MUL)
        return "*".join(_wrap(f, _PREC_MUL if isinstance(f, Const) else _PREC_POW)
                        if not isinstance(f, Pow) else _plain(f) for f in e.factors)
    if isinstance(e, Pow):
        if e.base == E:
            return f"exp({_plain(e.exp)})"
        base = _wrap(e.base, _PREC_ATOM)
        ex = e.exp
        if (isinstance(ex, Const) and ex.value >= 0 and ex.value.denominator == 1) or isinstance(ex, Sym):
            return f"{base}^{_plain(ex)}"
        return f"{base}^({_plain(ex)})"
    if isinstance(e, Deformed):
        return f"D[{e.kernel.text()},{e.var}]({_plain(e.arg)})"
    if isinstance(e, Derivative):
        if e.order == 1:
            return f"d({_plain(e.arg)},{e.var})"
        return f"d({_plain(e.arg)},{e.var},{e.order})"
    raise TypeError(type(e))  # pragma: no cover


# latex ------------------------------------------------------------------

def _name_tex(name: str) -> str:
    if name in _GREEK:
        return "\\" + name
    if len(name) > 1:
        base, _, sub = name.partition("_")
        if sub:
            return f"{_name_tex(base)}_{{{_name_tex(sub)}}}"
        m = len(base.rstrip("0123456789"))
        if 0 < m < len(base):
            return f"{_name_tex(base[:m])}_{{{base[m:]}}}"
        return f"\\mathrm{{{name}}}"
    return name


def _frac_tex(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    sign = "-" if v < 0 else ""
    return f"{sign}\\frac{{{abs(v.numerator)}}}{{{v.denominator}}}"


def _ltx_wrap(e: Expr, min_prec: int) -> str:
    s = _latex(e)
    return f"\\left({s}\\right)" if _prec(e) < min_prec else s


def _latex(e: Expr) -> str:
    if isinstance(e, Const):
        return _frac_tex(e.value)
    if isinstance(e, Sym):
        return "e" if e == E else _name_tex(e.name)
    if isinstance(e, Offset):
        return f"\\left({e.var} - {_latex(e.origin)}\\right)"
    if isinstance(e, Func):
        args = ", ".join(_latex(a) for a in e.args)
        name = _name_tex(e.name)
        if len(e.args) == 1 and e.orders[0]:
            return f"{name}^{{({e.orders[0]})}}({args})" if e.orders[0] > 3 else \
                f"{name}{chr(39) * e.orders[0]}({args})"
        if any(e.orders):
            parts = "".join(
                f"\\partial_{{{_latex(a)}}}" + (f"^{{{n}}}" if n > 1 else "")
                for a, n in zip(e.args, e.orders) if n
            )
            return f"{parts}{name}({args})"
        if e.name in ("log", "sin", "cos"):
            return f"\\{e.name}\\left({args}\\right)"
        return f"{name}({args})"
    if isinstance(e, Add):
        out = []
        for i, t in enumerate(e.terms):
            neg, mag = _neg_split(t)
            body = _latex(mag)
            out.append(("-" if neg else "") + body if i == 0 else (" - " if neg else " + ") + body)
        return "".join(out)
    if isinstance(e, Mul):
        neg, mag = _neg_split(e)
        if neg:
            return "-" + _ltx_wrap(mag, _PREC_MUL)
        parts = []
        for f in e.factors:
            if isinstance(f, Const):
                parts.append(_frac_tex(f.value))
            else:
                parts.append(_ltx_wrap(f, _PREC_MUL + 1) if not isinstance(f, Pow) else _latex(f))
        return " ".join(parts)
    if isinstance(e, Pow):
        if e.base == E:
            return f"e^{{{_latex(e.exp)}}}"
        return f"{_ltx_wrap(e.base, _PREC_ATOM)}^{{{_latex(e.exp)}}}"
    if isinstance(e, Deformed):
        return f"D^{{\\mathrm{{{e.kernel.text()}}}}}_{{{e.var}}}\\left[{_latex(e.arg)}\\right]"
    if isinstance(e, Derivative):
        n = "" if e.order == 1 else f"^{{{e.order}}}"
        return f"\\frac{{d{n}}}{{d{e.var}{n}}}\\left[{_latex(e.arg)}\\right]"
    raise TypeError(type(e))  # pragma: no cover


# sexpr ------------------------------------------------------------------

def _sexpr(e: Expr) -> str:
    if isinstance(e, Const):
        return f"(const {_frac_plain(e.value)})"
    if isinstance(e, Sym):
        return f"(sym {e.name})"
    if isinstance(e, Offset):
        return f"(offset {e.var} {_sexpr(e.origin)})"
    if isinstance(e, Func):
        orders = " ".join(map(str, e.orders))
        args = " ".join(_sexpr(a) for a in e.args)
        return f"(fn {e.name} ({orders}) {args})"
    if isinstance(e, Add):
        return "(add " + " ".join(_sexpr(t) for t in e.terms) + ")"
    if isinstance(e, Mul):
        return "(mul " + " ".join(_sexpr(f) for f in e.factors) + ")"
    if isinstance(e, Pow):
        return f"(pow {_sexpr(e.base)} {_sexpr(e.exp)})"
    if isinstance(e, Deformed):
        return f"(deformed {e.kernel.sexpr()} {e.var} {_sexpr(e.arg)})"
    if isinstance(e, Derivative):
        return f"(deriv {e.var} {e.order} {_sexpr(e.arg)})"
    raise TypeError(type(e))  # pragma: no cover
