"""Field solvers: reaction-convection-diffusion, Fokker-Planck variants and KdV."""

from __future__ import annotations

import warnings
from typing import Callable

import numpy as np

from .core import CFLViolation, FieldGrid, NegativeDensity, NonFiniteState, rk4_step, time_grid

__all__ = [
    "Grid",
    "simulate_rcd",
    "heat_kernel_gaussian",
    "simulate_fokker_planck",
    "simulate_kdv",
    "kdv_soliton",
]

_PAD = {"periodic": "wrap", "reflecting": "edge", "dirichlet": "constant"}


class Grid:
    """Uniform cell-centred grid ``x_i = x0 + i dx`` in one or more dimensions."""

    def __init__(self, x0, dx, m, boundary="periodic"):
        self.origin = tuple(np.atleast_1d(np.asarray(x0, dtype=float)).tolist())
        d = len(self.origin)
        self.spacing = tuple(np.broadcast_to(np.asarray(dx, dtype=float), (d,)).tolist())
        self.shape = tuple(int(v) for v in np.broadcast_to(np.asarray(m), (d,)))
        if boundary not in _PAD:
            raise ValueError(f"boundary must be one of {sorted(_PAD)}")
        if min(self.spacing) <= 0 or min(self.shape) < 3:
            raise ValueError("need positive spacing and at least three points per axis")
        self.boundary = boundary

    @classmethod
    def interval(cls, a: float, b: float, m: int, boundary="periodic") -> "Grid":
        """``m`` points spanning ``[a, b)`` (periodic) or cell centres of ``[a, b]``."""
        dx = (b - a) / m
        x0 = a if boundary == "periodic" else a + 0.5 * dx
        return cls(x0, dx, m, boundary)

    @property
    def dx(self) -> float:
        return self.spacing[0]

    @property
    def m(self) -> int:
        return self.shape[0]

    @property
    def dim(self) -> int:
        return len(self.shape)

    def axis(self, i=0) -> np.ndarray:
        return self.origin[i] + self.spacing[i] * np.arange(self.shape[i])

    def mesh(self):
        return np.meshgrid(*[self.axis(i) for i in range(self.dim)], indexing="ij")

    @property
    def cell(self) -> float:
        return float(np.prod(self.spacing))

    def pad(self, u: np.ndarray, width=1) -> np.ndarray:
        return np.pad(u, width, mode=_PAD[self.boundary])

    def empty_field(self, u0):
        u0 = np.asarray(u0(*self.mesh()) if callable(u0) else u0, dtype=float)
        if u0.shape != self.shape:
            raise ValueError(f"initial data shape {u0.shape} does not match grid {self.shape}")
        return u0


def _as_vec(v, d):
    return np.broadcast_to(np.asarray(v, dtype=float), (d,))


def _save_plan(n: int, save_every: int | None, snapshots: int) -> np.ndarray:
    steps = n - 1
    if save_every is None:
        save_every = max(1, steps // max(1, snapshots))
    idx = list(range(0, steps + 1, save_every))
    if idx[-1] != steps:
        idx.append(steps)
    return np.array(idx)


def _run(rhs, u, t0, dt, n, save_idx, invariants, post=None):
    times, snaps = [], []
    series = {k: [] for k in invariants}
    save = set(int(i) for i in save_idx)

    def record(i, u):
        times.append(t0 + i * dt)
        snaps.append(u.copy())
        for k, f in invariants.items():
            series[k].append(f(u))

    record(0, u)
    for i in range(1, n):
        u = rk4_step(rhs, t0 + (i - 1) * dt, u, dt)
        if post is not None:
            u = post(u, t0 + i * dt)
        if not np.all(np.isfinite(u)):
            raise NonFiniteState(f"non-finite field at t={t0 + i * dt:g}")
        if i in save:
            record(i, u)
    return np.array(times), np.array(snaps), {k: np.array(v) for k, v in series.items()}


# reaction-convection-diffusion ---------------------------------------------------

def simulate_rcd(K=1.0, gamma=0.0, beta=0.0, f=0.0, grid: Grid | None = None, u0=None,
                 t_span=(0.0, 0.1), dt=None, snapshots=20, save_every=None) -> FieldGrid:
    """``U_t + gamma . grad U - div(K grad U) + beta U = f`` by the method of lines.

    Convection is first-order upwind, diffusion second-order central (diagonal
    ``K``), time stepping RK4.  ``K`` and ``gamma`` may be per-axis sequences;
    ``f`` is a constant, an array on the grid, or ``f(t, *mesh)``.  The explicit
    bounds ``dt <= min dx^2 / (2 K d)`` and ``dt <= min dx / |gamma|`` are enforced.
    """
    grid = grid or Grid.interval(-10.0, 10.0, 400)
    d = grid.dim
    Kv, gv = _as_vec(K, d), _as_vec(gamma, d)
    if np.any(Kv < 0):
        raise ValueError("K must be non-negative")
    if u0 is None:
        u0 = lambda *xs: np.exp(-0.5 * sum(x * x for x in xs))  # noqa: E731
    u = grid.empty_field(u0)
    h = np.array(grid.spacing)
    bounds = []
    if np.any(Kv > 0):
        bounds.append(float(1.0 / np.sum(2.0 * Kv / h ** 2)))
    if np.any(gv != 0):
        bounds.append(float(1.0 / np.sum(np.abs(gv) / h)))
    bound = min(bounds) if bounds else np.inf
    if dt is None:
        dt = 0.5 * bound if np.isfinite(bound) else 1e-3
        steps = int(np.ceil((t_span[1] - t_span[0]) / dt))
        dt = (t_span[1] - t_span[0]) / steps
    if dt > bound * (1 + 1e-12):
        raise CFLViolation(f"dt={dt:g} exceeds the explicit stability bound {bound:g}")
    mesh = grid.mesh()
    if callable(f):
        force = lambda t: np.asarray(f(t, *mesh), dtype=float)  # noqa: E731
    else:
        farr = np.broadcast_to(np.asarray(f, dtype=float), grid.shape)
        force = lambda t: farr  # noqa: E731

    def rhs(t, u):
        p = grid.pad(u)
        centre = tuple(slice(1, -1) for _ in range(d))
        out = -beta * u + force(t)
        for ax in range(d):
            def sh(k):
                s = list(centre)
                s[ax] = slice(1 + k, p.shape[ax] - 1 + k)
                return p[tuple(s)]
            up, um = sh(1), sh(-1)
            if Kv[ax]:
                out = out + Kv[ax] * (up - 2 * u + um) / h[ax] ** 2
            g = gv[ax]
            if g > 0:
                out = out - g * (u - um) / h[ax]
            elif g < 0:
                out = out - g * (up - u) / h[ax]
        return out

    t0, n = time_grid(t_span, dt)
    save = _save_plan(n, save_every, snapshots)
    inv = {"mass": lambda u: float(u.sum() * grid.cell),
           "l2": lambda u: float(np.sqrt((u * u).sum() * grid.cell))}
    times, snaps, cons = _run(rhs, u, t0, dt, n, save, inv)
    return FieldGrid(grid.origin, grid.spacing, grid.shape, grid.boundary, times, snaps, cons,
                     stability={"dt": dt, "bound": bound, "satisfied": True,
                                "rule": "dt <= 1/sum(2K/dx^2) and dt <= 1/sum(|gamma|/dx)"},
                     meta={"system": "rcd", "scheme": "upwind/central + rk4",
                           "params": {"K": Kv.tolist(), "gamma": gv.tolist(), "beta": beta}},
                     name="U")


def heat_kernel_gaussian(x, t, K=1.0, s=1.0, amplitude=1.0):
    """Free-space solution of ``U_t = K U_xx`` from ``amplitude exp(-x^2 / 2 s^2)``."""
    w2 = s * s + 2.0 * K * t
    return amplitude * np.sqrt(s * s / w2) * np.exp(-np.asarray(x) ** 2 / (2.0 * w2))


# Fokker-Planck ------------------------------------------------------------------

_FP_VARIANTS = ("linear", "nl1", "nl2")


def _fitting_diffusion(a: np.ndarray, d: np.ndarray | float) -> np.ndarray:
    """``a coth(a/d) - d``, continuous at ``d = 0`` (gives ``a``) and small ``a/d``."""
    a, d = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(d, dtype=float))
    out = a.copy()
    pos = d > 0
    z = np.zeros_like(a)
    z[pos] = a[pos] / d[pos]
    small = pos & (z < 1e-3)
    big = pos & ~small
    out[small] = a[small] * z[small] / 3.0
    out[big] = a[big] / np.tanh(z[big]) - d[big]
    return out


def simulate_fokker_planck(f: Callable | float = 0.0, D=1.0, mu=1.0, nu=1.0, variant="linear",
                           grid: Grid | None = None, p0=None, t_span=(0.0, 1.0), dt=None,
                           snapshots=20, save_every=None, floor=1e-300) -> FieldGrid:
    """Conservative finite-volume Fokker-Planck solver.

    * ``linear``: ``P_t = -(f P)_x + D P_xx``
    * ``nl1``: ``P_t = -(f P)_x + D (P^(mu-1) P_x)_x - (mu-1)/2 D P_x^2 P^(mu-2)``
    * ``nl2``: ``(P^mu)_t = -(f P^mu)_x + D (P^(nu-1) P_x)_x - (nu-1)/2 D P_x^2 P^(nu-2)``

    Face fluxes are central with Scharfetter-Gummel fitting: the drift gets
    the extra diffusion ``a coth(a/D_eff) - D_eff`` (``a = |f| h / 2``), which
    is O(h^2) in the bulk and turns into upwinding where the diffusion
    degenerates.  Diffusion uses two-point gradients; reflecting boundaries close the outer faces, so the sum of
    fluxes telescopes.  ``nl2`` evolves ``Q = P^mu``.  Negative values are
    clamped to zero and reported as :class:`NegativeDensity` events.
    """
    if variant not in _FP_VARIANTS:
        raise ValueError(f"variant must be one of {_FP_VARIANTS}")
    grid = grid or Grid.interval(-8.0, 8.0, 320, "reflecting")
    if grid.dim != 1 or grid.boundary == "dirichlet":
        raise ValueError("Fokker-Planck runs on a 1-D periodic or reflecting grid")
    x, h = grid.axis(), grid.dx
    if p0 is None:
        p0 = lambda x: np.exp(-0.5 * (x - 1.0) ** 2) / np.sqrt(2 * np.pi)  # noqa: E731
    P = grid.empty_field(p0)
    if np.any(P < 0):
        raise ValueError("initial density must be non-negative")
    if abs(P.sum() * h - 1.0) > 1e-6:
        raise ValueError(f"initial density must integrate to 1 (got {P.sum() * h:.8g})")
    xf = x + 0.5 * h  # face i+1/2
    fface = np.asarray(f(xf), dtype=float) if callable(f) else np.full_like(xf, float(f))
    periodic = grid.boundary == "periodic"
    expo_d = (mu if variant == "nl1" else nu) - 1.0
    extra_c = 0.5 * expo_d * D

    def flux(Pd, carrier):
        # face flux J_{i+1/2}; Pd: density, carrier: transported quantity
        nxt = np.roll(Pd, -1)
        cn = np.roll(carrier, -1)
        pf = np.maximum(0.5 * (Pd + nxt), 0.0)
        pe = np.power(pf, expo_d) if expo_d else 1.0
        # diffusivity seen by the carrier, plus Scharfetter-Gummel fitting diffusion
        deff = D * pe * (np.power(pf, 1.0 - mu) / mu if variant == "nl2" else 1.0)
        art = _fitting_diffusion(0.5 * np.abs(fface) * h, deff)
        J = fface * 0.5 * (carrier + cn) - (art * (cn - carrier) + D * pe * (nxt - Pd)) / h
        if not periodic:
            J[-1] = 0.0
        return J

    def extra(Pd):
        if not expo_d:
            return 0.0
        p = np.pad(Pd, 1, mode="wrap" if periodic else "edge")
        px = (p[2:] - p[:-2]) / (2 * h)
        pos = Pd > floor
        out = np.zeros_like(Pd)
        out[pos] = px[pos] ** 2 * np.power(Pd[pos], expo_d - 1.0)
        return -extra_c * out

    def density(u):
        if variant == "nl2":
            return np.power(np.maximum(u, 0.0), 1.0 / mu)
        return u

    def rhs(t, u):
        Pd = density(u)
        carrier = u
        J = flux(Pd, carrier)
        div = (J - np.roll(J, 1)) / h
        return -div + extra(Pd)

    u = P ** mu if variant == "nl2" else P.copy()
    # effective diffusivity of the evolved variable, largest over the initial data
    pos = P[P > 0]
    if variant == "linear" or pos.size == 0:
        dmax = D
    elif variant == "nl1":
        dmax = D * float(np.max(pos ** (mu - 1.0)))
    else:
        dmax = D / mu * float(np.max(pos ** (nu - mu)))
    fmax = float(np.max(np.abs(fface)))
    dmax += 0.5 * fmax * h  # fitting diffusion never exceeds a
    bounds = [h * h / (2.0 * dmax)] if dmax > 0 else []
    if fmax > 0:
        bounds.append(h / fmax)
    bound = min(bounds) if bounds else np.inf
    if dt is None:
        dt = 0.5 * bound
        steps = int(np.ceil((t_span[1] - t_span[0]) / dt))
        dt = (t_span[1] - t_span[0]) / steps
    if dt > bound * (1 + 1e-12):
        raise CFLViolation(f"dt={dt:g} exceeds the explicit stability bound {bound:g}")

    events: list[str] = []

    def clamp(u, t):
        if np.any(u < 0):
            lo = float(u.min())
            if lo < -1e-10 * max(float(u.max()), 1e-300):
                events.append(f"t={t:.6g}: negative density {lo:.3g} clamped")
            return np.maximum(u, 0.0)
        return u

    t0, n = time_grid(t_span, dt)
    save = _save_plan(n, save_every, snapshots)
    inv = {"norm": lambda u: float(density(u).sum() * h),
           "evolved_norm": lambda u: float(u.sum() * h)}
    times, snaps, cons = _run(rhs, u, t0, dt, n, save, inv, post=clamp)
    if variant == "nl2":
        snaps = np.power(np.maximum(snaps, 0.0), 1.0 / mu)
    if events:
        warnings.warn(f"{len(events)} negative-density events; first: {events[0]}", NegativeDensity,
                      stacklevel=2)
    return FieldGrid(grid.origin, grid.spacing, grid.shape, grid.boundary, times, snaps, cons,
                     stability={"dt": dt, "bound": bound, "satisfied": True,
                                "rule": "dt <= dx^2/(2 max D_eff) and dt <= dx/max|f|"},
                     meta={"system": {"linear": "fp-linear", "nl1": "fp-nonlinear-1",
                                      "nl2": "fp-nonlinear-2"}[variant],
                           "variant": variant, "scheme": "finite volume, central flux + rk4",
                           "params": {"D": D, "mu": mu, "nu": nu}},
                     events=events, name="P")


# KdV ------------------------------------------------------------------------------

def kdv_soliton(x, t=0.0, c=4.0, x0=0.0, period: float | None = None):
    """``-(c/2) sech^2(sqrt(c) (x - x0 - c t) / 2)``, wrapped onto a periodic box if given."""
    s = np.asarray(x, dtype=float) - x0 - c * t
    if period is not None:
        s = (s + 0.5 * period) % period - 0.5 * period
    return -0.5 * c / np.cosh(0.5 * np.sqrt(c) * s) ** 2


def simulate_kdv(grid: Grid | None = None, c=4.0, phi0=None, t_span=(0.0, 10.0), dt=None,
                 scheme="pseudo-spectral", snapshots=20, save_every=None,
                 dealias=True) -> FieldGrid:
    """``phi_t + phi_xxx - 6 phi phi_x = 0`` on a periodic grid.

    ``pseudo-spectral``: integrating-factor RK4 in Fourier space.
    ``zabusky-kruskal``: the classic leapfrog finite-difference scheme, started
    with one RK4 step of the same spatial discretisation.
    Default data is the one-soliton of speed ``c`` centred in the box.
    """
    grid = grid or Grid.interval(-20.0, 20.0, 256)
    if grid.dim != 1 or grid.boundary != "periodic":
        raise ValueError("KdV runs on a 1-D periodic grid")
    x, h, m = grid.axis(), grid.dx, grid.m
    L = h * m
    if phi0 is None:
        centre = grid.origin[0] + 0.5 * L
        phi0 = lambda x: kdv_soliton(x, 0.0, c, centre, L)  # noqa: E731
    u = grid.empty_field(phi0)
    k = 2 * np.pi * np.fft.rfftfreq(m, d=h)
    if scheme == "pseudo-spectral":
        bound = 2.8 / (3.0 * max(k.max(), 1.0) * max(float(np.abs(u).max()), 1e-12))
        rule = "dt <= 2.8 / (3 k_max max|phi|) (nonlinear term, linear part exact)"
    elif scheme == "zabusky-kruskal":
        umax = max(float(np.abs(u).max()), 1e-12)
        bound = 1.0 / (4.0 / h ** 3 + 12.0 * umax / h)
        rule = "dt <= 1 / (4/dx^3 + 12 max|phi|/dx) (leapfrog)"
    else:
        raise ValueError("scheme is 'pseudo-spectral' or 'zabusky-kruskal'")
    if dt is None:
        dt = 0.05 * bound if scheme == "pseudo-spectral" else 0.5 * bound
        steps = int(np.ceil((t_span[1] - t_span[0]) / dt))
        dt = (t_span[1] - t_span[0]) / steps
    if dt > bound * (1 + 1e-12):
        raise CFLViolation(f"dt={dt:g} exceeds the stability bound {bound:g}")
    t0, n = time_grid(t_span, dt)
    save = set(_save_plan(n, save_every, snapshots).tolist())
    inv = {"mass": lambda u: float(u.sum() * h), "l2": lambda u: float((u * u).sum() * h)}
    times, snaps = [t0], [u.copy()]
    series = {kk: [f(u)] for kk, f in inv.items()}

    def rec(i, v):
        if i in save:
            times.append(t0 + i * dt)
            snaps.append(v.copy())
            for kk, f in inv.items():
                series[kk].append(f(v))

    if scheme == "pseudo-spectral":
        lin = 1j * k ** 3
        mask = np.ones_like(k)
        if dealias:
            mask[k > (2.0 / 3.0) * k.max()] = 0.0
        ik3 = 3j * k * mask

        def N(vh, t):
            # nonlinear part in the rotating frame
            e = np.exp(lin * t)
            ph = e * vh
            return np.exp(-lin * t) * ik3 * np.fft.rfft(np.fft.irfft(ph, n=m) ** 2)

        vh = np.fft.rfft(u)
        tl = 0.0  # time since t0; vh lives in the frame rotating with exp(i k^3 t)
        for i in range(1, n):
            k1 = N(vh, tl)
            k2 = N(vh + 0.5 * dt * k1, tl + 0.5 * dt)
            k3 = N(vh + 0.5 * dt * k2, tl + 0.5 * dt)
            k4 = N(vh + dt * k3, tl + dt)
            vh = vh + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            tl += dt
            if i in save:
                v = np.fft.irfft(np.exp(lin * tl) * vh, n=m)
                if not np.all(np.isfinite(v)):
                    raise NonFiniteState(f"non-finite field at t={t0 + tl:g}")
                rec(i, v)
    else:
        def rhs(t, v):
            vp1, vm1 = np.roll(v, -1), np.roll(v, 1)
            vp2, vm2 = np.roll(v, -2), np.roll(v, 2)
            nonlin = 2.0 * (vp1 + v + vm1) * (vp1 - vm1) / (2.0 * h)
            disp = (vp2 - 2 * vp1 + 2 * vm1 - vm2) / (2.0 * h ** 3)
            return nonlin - disp

        prev = u.copy()
        cur = rk4_step(rhs, t0, u, dt)
        rec(1, cur)
        for i in range(2, n):
            nxt = prev + 2.0 * dt * rhs(None, cur)
            prev, cur = cur, nxt
            if not np.all(np.isfinite(cur)):
                raise NonFiniteState(f"non-finite field at t={t0 + i * dt:g}")
            rec(i, cur)

    return FieldGrid(grid.origin, grid.spacing, grid.shape, "periodic", np.array(times),
                     np.array(snaps), {kk: np.array(v) for kk, v in series.items()},
                     stability={"dt": dt, "bound": bound, "satisfied": True, "rule": rule},
                     meta={"system": "kdv", "scheme": scheme, "params": {"c": c}},
                     name="phi")
