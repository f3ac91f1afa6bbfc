"""Particle systems: damped oscillator, radiation reaction, Caldirola-Kanai."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import NonFiniteState, RunawayDetected, Trajectory, integrate_ode, rk4_step, time_grid

__all__ = [
    "damped_closed_form",
    "simulate_dissipative_oscillator",
    "ALDResult",
    "simulate_abraham_lorentz",
    "runaway_rate",
    "simulate_caldirola_kanai",
    "CKResult",
]


def damped_closed_form(w0sq: float, rate: float, x0: float, v0: float, t) -> np.ndarray:
    """Solution of ``x'' + rate x' + w0sq x = 0`` for all three damping regimes."""
    t = np.asarray(t, dtype=float)
    h = 0.5 * rate
    disc = w0sq - h * h
    env = np.exp(-h * t)
    if disc > 1e-14 * max(1.0, w0sq):
        w = np.sqrt(disc)
        return env * (x0 * np.cos(w * t) + (v0 + h * x0) / w * np.sin(w * t))
    if disc < -1e-14 * max(1.0, w0sq):
        s = np.sqrt(-disc)
        return env * (x0 * np.cosh(s * t) + (v0 + h * x0) / s * np.sinh(s * t))
    return env * (x0 + (v0 + h * x0) * t)


def simulate_dissipative_oscillator(m=1.0, gamma=0.2, k=1.0, x0=1.0, v0=0.0,
                                    t_span=(0.0, 20.0), dt=1e-3, method="rk4") -> Trajectory:
    """``m x'' + k x + gamma x' = 0`` with the energy ``m v^2/2 + k x^2/2``."""
    if m <= 0 or k <= 0:
        raise ValueError("m and k must be positive")
    if gamma < 0:
        raise ValueError("gamma must be non-negative")

    def rhs(t, y):
        return np.array([y[1], -(k * y[0] + gamma * y[1]) / m])

    tr = integrate_ode(rhs, [x0, v0], t_span, dt, method, columns=("x", "v"),
                       meta={"system": "dissipative-oscillator",
                             "params": {"m": m, "gamma": gamma, "k": k, "x0": x0, "v0": v0}})
    x, v = tr["x"], tr["v"]
    tr.series["E"] = 0.5 * m * v ** 2 + 0.5 * k * x ** 2
    return tr


# radiation reaction -----------------------------------------------------------

def runaway_rate(m: float, k: float, eps: float) -> float:
    """Real root of ``eps r^3 - m r^2 - k = 0``: growth rate of the runaway mode."""
    roots = np.roots([eps, -m, 0.0, -k])
    real = roots[np.abs(roots.imag) < 1e-9 * np.abs(roots).max()].real
    return float(real.max())


@dataclass
class ALDResult:
    reduced: Trajectory
    direct: Trajectory | None
    runaway: bool
    runaway_time: float | None
    growth_rate: float | None  # characteristic-root oracle


def simulate_abraham_lorentz(m=1.0, k=1.0, eps=0.01, x0=1.0, v0=0.0, a0=None,
                             t_span=(0.0, 20.0), dt=1e-3, runaway_factor=1e3,
                             on_runaway="truncate") -> ALDResult:
    """``m x'' + k x - eps x''' = 0`` integrated two ways.

    ``reduced`` replaces ``x'''`` by ``-(k/m) x'`` (Landau-Lifshitz order
    reduction), a damped oscillator with damping ``eps k / m``.  ``direct``
    integrates the third-order equation from ``(x0, v0, a0)``; once its energy
    exceeds ``runaway_factor`` times the initial energy the run stops and is
    flagged, or :class:`RunawayDetected` is raised with ``on_runaway="raise"``.
    ``a0`` defaults to the physical value ``-k x0 / m``.
    """
    if on_runaway not in ("truncate", "raise"):
        raise ValueError("on_runaway is 'truncate' or 'raise'")
    params = {"m": m, "k": k, "eps": eps, "x0": x0, "v0": v0}
    g_eff = eps * k / m

    def reduced_rhs(t, y):
        return np.array([y[1], -(k * y[0] + g_eff * y[1]) / m])

    reduced = integrate_ode(reduced_rhs, [x0, v0], t_span, dt, "rk4", columns=("x", "v"),
                            meta={"system": "abraham-lorentz", "form": "order-reduced",
                                  "params": params})
    reduced.series["E"] = 0.5 * m * reduced["v"] ** 2 + 0.5 * k * reduced["x"] ** 2
    if eps == 0:
        return ALDResult(reduced, None, False, None, None)

    a0 = -k * x0 / m if a0 is None else a0

    def direct_rhs(t, y):
        return np.array([y[1], y[2], (m * y[2] + k * y[0]) / eps])

    t0, n = time_grid(t_span, dt)
    y = np.array([x0, v0, a0], dtype=float)
    E0 = 0.5 * m * v0 ** 2 + 0.5 * k * x0 ** 2
    limit = runaway_factor * max(E0, 1e-300)
    rows = [y]
    runaway_t = None
    for i in range(1, n):
        y = rk4_step(direct_rhs, t0 + (i - 1) * dt, y, dt)
        if not np.all(np.isfinite(y)):
            raise NonFiniteState(f"direct ALD integration overflowed at t={t0 + i * dt:g}")
        rows.append(y)
        if 0.5 * m * y[1] ** 2 + 0.5 * k * y[0] ** 2 > limit:
            runaway_t = t0 + i * dt
            break
    if runaway_t is not None and on_runaway == "raise":
        raise RunawayDetected(f"energy exceeded {runaway_factor:g}x its initial value at t={runaway_t:g}")
    states = np.array(rows)
    direct = Trajectory(t0, dt, states, ("x", "v", "a"),
                        meta={"system": "abraham-lorentz", "form": "direct third-order",
                              "params": dict(params, a0=a0), "integrator": "rk4",
                              "runaway_time": runaway_t})
    direct.series["E"] = 0.5 * m * states[:, 1] ** 2 + 0.5 * k * states[:, 0] ** 2
    return ALDResult(reduced, direct, runaway_t is not None, runaway_t, runaway_rate(m, k, eps))


# Caldirola-Kanai ------------------------------------------------------------

@dataclass
class CKResult:
    canonical: Trajectory  # columns q, p; series H
    physical: Trajectory   # columns x, v; series E (mechanical energy)


def simulate_caldirola_kanai(m=1.0, omega0=1.0, lam=0.1, q0=1.0, p0=0.0,
                             t_span=(0.0, 20.0), dt=1e-3) -> CKResult:
    """Hamilton's equations of ``H = exp(-lam t) p^2/2m + m exp(lam t) omega0^2 q^2/2``."""
    if m <= 0 or omega0 <= 0:
        raise ValueError("m and omega0 must be positive")
    w2 = omega0 ** 2

    def rhs(t, y):
        return np.array([np.exp(-lam * t) * y[1] / m, -m * np.exp(lam * t) * w2 * y[0]])

    params = {"m": m, "omega0": omega0, "lambda": lam, "q0": q0, "p0": p0}
    can = integrate_ode(rhs, [q0, p0], t_span, dt, "rk4", columns=("q", "p"),
                        meta={"system": "caldirola-kanai", "params": params})
    t, q, p = can.t, can["q"], can["p"]
    can.series["H"] = np.exp(-lam * t) * p ** 2 / (2 * m) + 0.5 * m * np.exp(lam * t) * w2 * q ** 2
    v = np.exp(-lam * t) * p / m
    phys = Trajectory(can.t0, can.dt, np.column_stack([q, v]), ("x", "v"),
                      meta={"system": "caldirola-kanai", "form": "physical", "params": params})
    phys.series["E"] = 0.5 * m * v ** 2 + 0.5 * m * w2 * q ** 2
    return CKResult(can, phys)
