"""Underdamped scaled Brownian motion: Euler-Maruyama ensemble and moment oracle."""

from __future__ import annotations

import numpy as np

from .core import EnsembleStats, NonFiniteState, Trajectory, integrate_ode, time_grid

__all__ = ["simulate_langevin_sbm", "sbm_moments", "trajectory_rng", "SEED_SCHEME"]

SEED_SCHEME = "numpy Philox4x64, key = (seed, trajectory index), counter from 0"


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Independent counter-based stream of one ensemble member."""
    return np.random.Generator(np.random.Philox(key=[int(seed), int(index)]))


def _coefficients(m, gamma0, D0, tau, alpha):
    def theta(t):
        return gamma0 * (1.0 + t / tau) ** (alpha - 1.0) / m

    def sigma(t):
        g = gamma0 * (1.0 + t / tau) ** (alpha - 1.0)
        D = D0 * (1.0 + t / tau) ** (alpha - 1.0)
        return np.sqrt(2.0 * D) * g / m

    return theta, sigma


def _checkpoint_indices(steps: int, checkpoints: int) -> np.ndarray:
    if checkpoints < 1:
        raise ValueError("need at least one checkpoint")
    return np.unique(np.round(np.linspace(0, steps, checkpoints + 1)).astype(int))


def simulate_langevin_sbm(m=1.0, gamma0=1.0, D0=1.0, tau=1.0, alpha=0.5, N=1000, seed=None,
                          t_span=(0.0, 10.0), dt=1e-3, checkpoints=10, x0=0.0, v0=0.0,
                          block=1024, chunk=512, keep_path=True) -> EnsembleStats:
    """Ensemble of ``m x'' + gamma(t) x' = sqrt(2 D(t)) gamma(t) zeta(t)``.

    ``gamma(t) = gamma0 (1 + t/tau)^(alpha-1)`` and ``D(t)`` likewise.  Itô
    Euler-Maruyama with sqrt(dt)-scaled normal increments; trajectory ``i``
    draws from ``trajectory_rng(seed, i)`` so results do not depend on
    ``block`` or ``chunk``.  MSD is ``<(x - x0)^2>`` with standard error
    ``std/sqrt(N)``.
    """
    if seed is None:
        raise ValueError("a seed is required for stochastic runs")
    if N < 1:
        raise ValueError("N must be at least 1")
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if m <= 0 or gamma0 <= 0 or tau <= 0 or D0 < 0:
        raise ValueError("m, gamma0, tau must be positive and D0 non-negative")
    t0, n = time_grid(t_span, dt)
    steps = n - 1
    idx = _checkpoint_indices(steps, checkpoints)
    theta, sigma = _coefficients(m, gamma0, D0, tau, alpha)
    tg = t0 + dt * np.arange(steps)
    th = theta(tg) * dt
    sg = sigma(tg) * np.sqrt(dt)
    noisy = D0 > 0

    k = len(idx)
    s_y = np.zeros(k)
    s_y2 = np.zeros(k)
    s_y4 = np.zeros(k)
    s_v = np.zeros(k)
    s_v2 = np.zeros(k)
    path = None
    where = {int(j): c for c, j in enumerate(idx)}

    for lo in range(0, N, block):
        hi = min(N, lo + block)
        b = hi - lo
        y = np.zeros(b)
        v = np.full(b, float(v0))
        gens = [trajectory_rng(seed, i) for i in range(lo, hi)] if noisy else []
        record = keep_path and lo == 0
        if record:
            path = np.empty((n, 2))
            path[0] = (x0, v0)

        def save(step):
            c = where.get(step)
            if c is not None:
                y2 = y * y
                s_y[c] += y.sum()
                s_y2[c] += y2.sum()
                s_y4[c] += (y2 * y2).sum()
                s_v[c] += v.sum()
                s_v2[c] += (v * v).sum()

        save(0)
        for c0 in range(0, steps, chunk):
            c1 = min(steps, c0 + chunk)
            if noisy:
                xi = np.stack([g.standard_normal(c1 - c0) for g in gens], axis=1)
            for s in range(c0, c1):
                dv = -th[s] * v
                if noisy:
                    dv += sg[s] * xi[s - c0]
                y = y + v * dt
                v = v + dv
                save(s + 1)
                if record:
                    path[s + 1] = (x0 + y[0], v[0])
            if not (np.all(np.isfinite(y)) and np.all(np.isfinite(v))):
                raise NonFiniteState(f"non-finite ensemble state before t={t0 + c1 * dt:g}")

    msd = s_y2 / N
    var4 = np.maximum(s_y4 / N - msd ** 2, 0.0)
    stderr = np.sqrt(var4 / N)
    msd[0] = 0.0
    stderr[0] = 0.0
    extra = {
        "mean_x": x0 + s_y / N,
        "mean_v": s_v / N,
        "v2": s_v2 / N,
    }
    params = {"m": m, "gamma0": gamma0, "D0": D0, "tau": tau, "alpha": alpha,
              "x0": x0, "v0": v0, "dt": dt, "t_span": list(t_span)}
    sample = None
    if path is not None:
        sample = Trajectory(t0, dt, path, ("x", "v"),
                            meta={"system": "langevin", "member": 0, "params": params,
                                  "integrator": "euler-maruyama"})
    return EnsembleStats(
        n=N, seed=int(seed), seed_scheme=SEED_SCHEME, times=t0 + dt * idx, msd=msd,
        stderr=stderr, extra=extra,
        meta={"system": "langevin", "params": params, "integrator": "euler-maruyama (Ito)"},
        sample_paths=sample,
    )


def sbm_moments(m=1.0, gamma0=1.0, D0=1.0, tau=1.0, alpha=0.5, v0=0.0, times=(10.0,),
                t0=0.0, dt=1e-3) -> dict[str, np.ndarray]:
    """Exact first and second moments of the linear SDE by RK4 on the moment ODEs.

    With ``y = x - x0``: ``<y>' = <v>``, ``<v>' = -theta <v>``, ``Syy' = 2 Syv``,
    ``Syv' = Svv - theta Syv``, ``Svv' = -2 theta Svv + sigma^2``.
    """
    theta, sigma = _coefficients(m, gamma0, D0, tau, alpha)
    times = np.asarray(times, dtype=float)

    def rhs(t, s):
        th = theta(t)
        return np.array([s[1], -th * s[1], 2 * s[3], s[4] - th * s[3], -2 * th * s[4] + sigma(t) ** 2])

    t_end = float(times.max())
    steps = max(1, int(np.ceil((t_end - t0) / dt)))
    h = (t_end - t0) / steps
    tr = integrate_ode(rhs, [0.0, v0, 0.0, 0.0, v0 * v0], (t0, t_end), h, "rk4",
                       columns=("y", "v", "yy", "yv", "vv"))
    tg = tr.t
    return {
        "t": times,
        "msd": np.interp(times, tg, tr["yy"]),
        "v2": np.interp(times, tg, tr["vv"]),
        "mean_v": np.interp(times, tg, tr["v"]),
    }
