"""Evaluate a symbolic residual on a numeric solution with finite-difference stencils."""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from ..kernels import expand_deformed
from ..symbolic.errors import EvalSingularity, UnboundSymbol
from ..symbolic.evaluate import binding_key, evaluate_array
from ..symbolic.expr import Expr, Func
from ..symbolic.simplify import simplify, terms_of
from ..symbolic.traverse import walk
from .core import FieldGrid, SymbolMismatch, Trajectory

__all__ = ["residual_check", "derivative"]

# fourth-order central stencils, half-width 3
_STENCILS = {
    0: np.array([0, 0, 0, 1, 0, 0, 0], dtype=float),
    1: np.array([0, 1, -8, 0, 8, -1, 0], dtype=float) / 12.0,
    2: np.array([0, -1, 16, -30, 16, -1, 0], dtype=float) / 12.0,
    3: np.array([1, -8, 13, 0, -13, 8, -1], dtype=float) / 8.0,
    4: np.array([-1, 12, -39, 56, -39, 12, -1], dtype=float) / 6.0,
}
_HALF = 3


def derivative(y: np.ndarray, h: float, order: int, axis: int = 0, periodic: bool = False) -> np.ndarray:
    """``order``-th derivative along ``axis``.

    Periodic axes use the FFT; others the central stencils above, trimmed by
    three points at each end.
    """
    if order == 0:
        return np.take(y, np.arange(_HALF, y.shape[axis] - _HALF), axis=axis) if not periodic else y
    if periodic:
        n = y.shape[axis]
        k = 2 * np.pi * np.fft.fftfreq(n, d=h)
        shape = [1] * y.ndim
        shape[axis] = n
        mult = ((1j * k) ** order).reshape(shape)
        if order % 2 and n % 2 == 0:
            mult = mult.copy()
            idx = [0] * y.ndim
            idx[axis] = n // 2
            mult[tuple(idx)] = 0.0  # Nyquist mode of an odd derivative is not real
        return np.real(np.fft.ifft(mult * np.fft.fft(y, axis=axis), axis=axis))
    try:
        w = _STENCILS[order]
    except KeyError:
        raise ValueError("derivatives up to fourth order are supported") from None
    n = y.shape[axis]
    if n <= 2 * _HALF:
        raise ValueError("too few samples for the difference stencil")
    out = 0.0
    for j, c in enumerate(w):
        if c:
            out = out + c * np.take(y, np.arange(j, n - 2 * _HALF + j), axis=axis)
    return out / h ** order


def _dynamic_heads(e: Expr, names) -> set[tuple[str, tuple[int, ...]]]:
    return {(n.name, n.orders) for n in walk(e) if isinstance(n, Func) and n.name in names}


def _uniform(times: np.ndarray) -> tuple[float, int]:
    """Spacing and count of the leading uniformly spaced snapshots."""
    d = np.diff(times)
    if d.size == 0:
        raise SymbolMismatch("need several snapshots")
    n = len(times)
    if d.size > 1 and abs(d[-1] - d[0]) > 1e-9 * abs(d[0]):
        d, n = d[:-1], n - 1  # trailing partial save
    if np.max(np.abs(d - d[0])) > 1e-9 * abs(d[0]):
        raise SymbolMismatch("snapshots are not uniformly spaced in time")
    return float(d[0]), n


def residual_check(equation: Expr, solution, params: Mapping[str, float] | None = None,
                   functions: Mapping[str, Callable | float] | None = None,
                   field: str | None = None, column_map: Mapping[str, str] | None = None,
                   x_range: tuple[float, float] | None = None) -> float:
    """Normalized max residual of ``equation`` on ``solution``.

    The equation's dependent functions are matched to trajectory columns
    (``x(t)`` to column ``x``; rename with ``column_map``) or to the field of a
    :class:`FieldGrid` (``phi(t,x)``, name from ``field``).  Remaining symbols
    come from ``params`` and then ``solution.meta['params']``; other
    functions (drifts, forcing) from ``functions``.  Returns
    ``max |R| / max |term|`` over the interior of the grid, 0 when every term
    vanishes.  ``x_range`` restricts a field check to part of the domain,
    e.g. away from zero-density tails where fractional powers are singular.
    """
    e = simplify(expand_deformed(equation))
    env: dict[str, object] = {}
    meta_params = dict(solution.meta.get("params", {})) if isinstance(solution.meta, dict) else {}
    env.update({k: v for k, v in meta_params.items() if np.isscalar(v)})
    env.update(params or {})
    env.update(functions or {})

    if isinstance(solution, Trajectory):
        cmap = dict(column_map or {})
        names = {c: c for c in solution.columns}
        names.update({k: v for k, v in cmap.items()})
        heads = _dynamic_heads(e, names)
        if not heads:
            raise SymbolMismatch("equation mentions none of the trajectory columns")
        for name, orders in heads:
            y = solution[names[name]]
            env[binding_key(name, orders)] = derivative(y, solution.dt, orders[0])
        env["t"] = derivative(solution.t, solution.dt, 0)
    elif isinstance(solution, FieldGrid):
        if solution.snapshots.ndim != 2:
            raise SymbolMismatch("residual checks on fields need a 1-D grid")
        fname = field or solution.name
        heads = _dynamic_heads(e, {fname})
        if not heads:
            raise SymbolMismatch(f"equation does not mention the field {fname!r}")
        dt, nt = _uniform(solution.times)
        per = solution.boundary == "periodic"
        for name, (ot, ox) in heads:
            u = derivative(solution.snapshots[:nt], dt, ot, axis=0)
            env[binding_key(name, (ot, ox))] = derivative(u, solution.dx, ox, axis=1, periodic=per)
        tt = derivative(solution.times[:nt], dt, 0)
        xx = solution.x if per else derivative(solution.x, solution.dx, 0)
        env["t"] = tt[:, None]
        env["x"] = xx[None, :]
        # trim non-periodic x so every array shares one interior
        if not per:
            for k, v in list(env.items()):
                if isinstance(v, np.ndarray) and v.ndim == 2 and v.shape[1] == solution.m:
                    env[k] = v[:, _HALF:-_HALF]
        if x_range is not None:
            keep = (xx >= x_range[0]) & (xx <= x_range[1])
            if not keep.any():
                raise SymbolMismatch("x_range selects no grid points")
            for k, v in list(env.items()):
                if isinstance(v, np.ndarray) and v.ndim == 2 and v.shape[1] == keep.size:
                    env[k] = v[:, keep]
    else:
        raise TypeError("solution must be a Trajectory or a FieldGrid")

    try:
        parts = [np.asarray(evaluate_array(t, env), dtype=float) for t in terms_of(e)]
    except UnboundSymbol as exc:
        raise SymbolMismatch(f"no value for {exc.args[0]!r}") from None
    except EvalSingularity as exc:
        raise SymbolMismatch(f"equation is singular on this solution: {exc}") from None
    shape = np.broadcast_shapes(*[p.shape for p in parts])
    parts = [np.broadcast_to(p, shape) for p in parts]
    total = np.abs(np.sum(parts, axis=0))
    scale = max(float(np.max(np.abs(p))) for p in parts)
    if scale == 0.0:
        return 0.0
    return float(np.max(total) / scale)
