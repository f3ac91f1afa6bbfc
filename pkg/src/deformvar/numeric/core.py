"""Result containers, fixed-step integrators and CSV/JSON export."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

__all__ = [
    "NumericError",
    "NonFiniteState",
    "CFLViolation",
    "RunawayDetected",
    "NormDrift",
    "SymbolMismatch",
    "NegativeDensity",
    "Trajectory",
    "FieldGrid",
    "EnsembleStats",
    "time_grid",
    "integrate_ode",
    "rk4_step",
]


class NumericError(RuntimeError):
    pass


class NonFiniteState(NumericError):
    pass


class CFLViolation(NumericError):
    pass


class RunawayDetected(NumericError):
    pass


class NormDrift(NumericError):
    pass


class SymbolMismatch(NumericError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "symbol mismatch"


class NegativeDensity(UserWarning):
    """Density went negative; values were clamped and the run continued."""


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if callable(v):
        return getattr(v, "__name__", "callable")
    return v


def _fmt(v: float) -> str:
    return repr(float(v))


def _csv_text(header: Sequence[str], rows: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


@dataclass
class Trajectory:
    """State rows on a uniform time grid."""

    t0: float
    dt: float
    states: np.ndarray  # (n, k)
    columns: tuple[str, ...]
    series: dict[str, np.ndarray] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim == 1:
            self.states = self.states[:, None]
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.states.shape[1] != len(self.columns):
            raise ValueError("one column name per state component")
        for k, v in self.series.items():
            if len(v) != self.n:
                raise ValueError(f"series {k!r} is not aligned with the grid")

    @property
    def n(self) -> int:
        return self.states.shape[0]

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    def __getitem__(self, name: str) -> np.ndarray:
        if name == "t":
            return self.t
        if name in self.columns:
            return self.states[:, self.columns.index(name)]
        return self.series[name]

    def to_csv(self) -> str:
        names = list(self.series)
        rows = np.column_stack([self.t, self.states] + [self.series[k] for k in names])
        return _csv_text(["t", *self.columns, *names], rows)

    def manifest(self) -> dict:
        return {
            "kind": "trajectory",
            "t0": self.t0,
            "dt": self.dt,
            "n": self.n,
            "columns": ["t", *self.columns, *self.series],
            "meta": _jsonable(self.meta),
        }


@dataclass
class FieldGrid:
    """Snapshots of a field on a uniform grid with conserved-quantity series."""

    origin: tuple[float, ...]
    spacing: tuple[float, ...]
    shape: tuple[int, ...]
    boundary: str
    times: np.ndarray
    snapshots: np.ndarray  # (len(times), *shape)
    conserved: dict[str, np.ndarray] = field(default_factory=dict)
    stability: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    events: list[str] = field(default_factory=list)
    name: str = "u"

    def __post_init__(self):
        if self.boundary not in ("periodic", "reflecting", "dirichlet"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        self.times = np.asarray(self.times, dtype=float)
        self.snapshots = np.asarray(self.snapshots, dtype=float)
        for k, v in self.conserved.items():
            if len(v) != len(self.times):
                raise ValueError(f"conserved series {k!r} is not aligned with the snapshots")

    @property
    def x0(self) -> float:
        return self.origin[0]

    @property
    def dx(self) -> float:
        return self.spacing[0]

    @property
    def m(self) -> int:
        return self.shape[0]

    def axis(self, i: int = 0) -> np.ndarray:
        return self.origin[i] + self.spacing[i] * np.arange(self.shape[i])

    @property
    def x(self) -> np.ndarray:
        return self.axis(0)

    @property
    def final(self) -> np.ndarray:
        return self.snapshots[-1]

    def drift(self, key: str) -> float:
        s = self.conserved[key]
        return float(np.max(np.abs(s - s[0])))

    def to_csv(self) -> str:
        flat = self.snapshots.reshape(len(self.times), -1)
        names = list(self.conserved)
        header = ["t"] + [f"{self.name}[{i}]" for i in range(flat.shape[1])] + names
        rows = np.column_stack([self.times, flat] + [self.conserved[k] for k in names])
        return _csv_text(header, rows)

    def manifest(self) -> dict:
        return {
            "kind": "field",
            "field": self.name,
            "origin": list(self.origin),
            "spacing": list(self.spacing),
            "shape": list(self.shape),
            "boundary": self.boundary,
            "snapshots": len(self.times),
            "stability": _jsonable(self.stability),
            "conserved_drift": {k: self.drift(k) for k in self.conserved},
            "events": list(self.events),
            "meta": _jsonable(self.meta),
        }


@dataclass
class EnsembleStats:
    """Ensemble moments on a set of checkpoint times."""

    n: int
    seed: int
    seed_scheme: str
    times: np.ndarray
    msd: np.ndarray
    stderr: np.ndarray
    extra: dict[str, np.ndarray] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    sample_paths: Trajectory | None = None

    def to_csv(self) -> str:
        names = list(self.extra)
        rows = np.column_stack([self.times, self.msd, self.stderr] + [self.extra[k] for k in names])
        return _csv_text(["t", "msd", "stderr", *names], rows)

    def manifest(self) -> dict:
        return {
            "kind": "ensemble",
            "N": self.n,
            "seed": self.seed,
            "seed_scheme": self.seed_scheme,
            "checkpoints": len(self.times),
            "columns": ["t", "msd", "stderr", *self.extra],
            "meta": _jsonable(self.meta),
        }


def manifest_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# integrators ----------------------------------------------------------------

def time_grid(t_span: Sequence[float], dt: float) -> tuple[float, int]:
    """Start time and number of grid points; the span must be a whole number of steps."""
    t0, t1 = map(float, t_span)
    if not dt > 0:
        raise ValueError("dt must be positive")
    if t1 < t0:
        raise ValueError("t_span must be increasing")
    steps = (t1 - t0) / dt
    n = int(round(steps))
    if abs(steps - n) > 1e-6 * max(1.0, steps):
        raise ValueError(f"t_span length {t1 - t0} is not a multiple of dt={dt}")
    return t0, n + 1


def rk4_step(rhs, t: float, y: np.ndarray, dt: float) -> np.ndarray:
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = rhs(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _semi_implicit_step(rhs, t, y, dt):
    # symplectic Euler: velocities first, then positions with the new velocities
    h = y.size // 2
    v_new = y[h:] + dt * rhs(t, y)[h:]
    mid = np.concatenate([y[:h], v_new])
    q_new = y[:h] + dt * rhs(t, mid)[:h]
    return np.concatenate([q_new, v_new])


_METHODS = {"rk4": rk4_step, "semi-implicit-euler": _semi_implicit_step}


def integrate_ode(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t_span: Sequence[float],
    dt: float,
    method: str = "rk4",
    columns: Sequence[str] | None = None,
    meta: Mapping | None = None,
) -> Trajectory:
    """Fixed-step integration of ``y' = rhs(t, y)`` on a uniform grid.

    ``semi-implicit-euler`` expects ``y = (positions, velocities)`` of equal
    length.  Raises :class:`NonFiniteState` as soon as the state blows up.
    """
    try:
        step = _METHODS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(_METHODS)}") from None
    y = np.array(y0, dtype=float).ravel()
    if method == "semi-implicit-euler" and y.size % 2:
        raise ValueError("semi-implicit Euler needs (positions, velocities) of equal length")
    t0, n = time_grid(t_span, dt)
    out = np.empty((n, y.size))
    out[0] = y
    for i in range(1, n):
        y = step(rhs, t0 + (i - 1) * dt, y, dt)
        if not np.all(np.isfinite(y)):
            raise NonFiniteState(f"non-finite state at t={t0 + i * dt:g}")
        out[i] = y
    cols = tuple(columns) if columns is not None else tuple(f"y{i}" for i in range(y.size))
    m = {"integrator": method}
    m.update(meta or {})
    return Trajectory(t0, dt, out, cols, meta=m)
