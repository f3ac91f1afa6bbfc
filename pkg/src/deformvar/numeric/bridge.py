"""Catalog-to-numerics bridge: default runs, invariant checks, derived-equation residuals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..catalog import UnknownSystem, build, get_system
from ..symbolic.expr import Expr
from ..variational import euler_lagrange, hamilton_elimination, legendre_transform
from .core import FieldGrid, Trajectory
from .fields import Grid, heat_kernel_gaussian, kdv_soliton, simulate_fokker_planck, simulate_kdv, simulate_rcd
from .langevin import sbm_moments, simulate_langevin_sbm
from .llg import implicit_form_residual, simulate_llg
from .particles import damped_closed_form, simulate_abraham_lorentz, simulate_caldirola_kanai, \
    simulate_dissipative_oscillator
from .residual import residual_check

__all__ = ["Check", "SimOutput", "SIMULATIONS", "simulation_params", "run_simulation",
           "derived_equation"]


@dataclass
class Check:
    name: str
    passed: bool
    value: float | None = None
    bound: float | None = None

    def line(self) -> str:
        v = "" if self.value is None else f" ({self.value:.3g}"
        if self.value is not None:
            v += f" vs {self.bound:.3g})" if self.bound is not None else ")"
        return f"{self.name}: {'PASS' if self.passed else 'FAIL'}{v}"

    def to_json(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed),
                "value": None if self.value is None else float(self.value),
                "bound": None if self.bound is None else float(self.bound)}


@dataclass
class SimOutput:
    system: str
    files: dict[str, str]  # file name -> CSV text
    manifest: dict
    checks: list[Check] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)


def _le(name, value, bound) -> Check:
    return Check(name, bool(value <= bound), float(value), float(bound))


def derived_equation(system: str, params: dict, variable: str | None = None) -> Expr:
    """Post-limit residual produced by the engine for one catalog entry."""
    sys = get_system(system)
    spec = build(system, params)
    var = variable or next(iter(sys.functions))
    return euler_lagrange(spec, var, sys.recipe).post_limit


# per-system runs ---------------------------------------------------------------

def _span(p):
    return (0.0, float(p["t_end"]))


def _dissipative(p, seed):
    tr = simulate_dissipative_oscillator(p["m"], p["gamma"], p["k"], p["x0"], p["v0"], _span(p), p["dt"])
    E = tr["E"]
    checks = []
    if p["gamma"] > 0:
        checks.append(_le("energy monotone", float(np.max(np.diff(E))), 1e-12 * E[0]))
    else:
        checks.append(_le("energy conserved", float(np.max(np.abs(E - E[0])) / E[0]), 1e-6))
    exact = damped_closed_form(p["k"] / p["m"], p["gamma"] / p["m"], p["x0"], p["v0"], tr.t)
    checks.append(_le("closed form", float(np.max(np.abs(tr["x"] - exact))), 1e-6))
    eq = derived_equation("dissipative-oscillator", {"U": "1/2*k*x^2"})
    checks.append(_le("derived equation residual", residual_check(eq, tr), 1e-4))
    return {"trajectory.csv": tr.to_csv()}, tr.manifest(), checks


def _langevin(p, seed):
    st = simulate_langevin_sbm(p["m"], p["gamma0"], p["D0"], p["tau"], p["alpha"], int(p["N"]), seed,
                               _span(p), p["dt"], int(p["checkpoints"]))
    o = sbm_moments(p["m"], p["gamma0"], p["D0"], p["tau"], p["alpha"], 0.0, st.times)
    se = np.where(st.stderr > 0, st.stderr, np.inf)
    z = np.abs(st.msd - o["msd"])[1:] / se[1:]
    checks = [Check("MSD(0) = 0", bool(st.msd[0] == 0.0), float(st.msd[0]))]
    if p["D0"] > 0:
        checks.append(_le("MSD within 3 SE of the moment oracle", float(np.max(z)), 3.0))
    files = {"msd.csv": st.to_csv()}
    if st.sample_paths is not None:
        files["member0.csv"] = st.sample_paths.to_csv()
        if p["D0"] == 0:
            eq = derived_equation("langevin", {"gamma": "gamma0*(1 + t/tau)^(alpha - 1)",
                                               "D": "0", "U": "0"})
            checks.append(_le("derived equation residual", residual_check(
                eq, st.sample_paths, params=p, functions={"zeta": 0.0}), 1e-3))
    man = st.manifest()
    man["oracle_msd"] = o["msd"].tolist()
    return files, man, checks


def _ald(p, seed):
    r = simulate_abraham_lorentz(p["m"], p["k"], p["eps"], p["x0"], p["v0"], None, _span(p), p["dt"])
    files = {"reduced.csv": r.reduced.to_csv()}
    E = r.reduced["E"]
    checks = [_le("reduced energy monotone", float(np.max(np.diff(E))), 1e-12 * E[0])]
    man = {"reduced": r.reduced.manifest()}
    if r.direct is not None:
        files["direct.csv"] = r.direct.to_csv()
        man["direct"] = r.direct.manifest()
        man["runaway"] = {"detected": r.runaway, "time": r.runaway_time, "oracle_rate": r.growth_rate}
        checks.append(Check("direct integration runaway flagged", True, r.runaway_time))
    eq = derived_equation("abraham-lorentz", {"U": "1/2*k*x^2"})
    env = {"e": math.sqrt(1.5 * p["eps"]), "c": 1.0, "k": p["k"], "m": p["m"]}
    checks.append(_le("derived equation residual (order-reduced)",
                      residual_check(eq, r.reduced, params=env), 1e-3))
    return files, man, checks


def _galley(p, seed):
    files, man, checks = _ald(p, seed)
    sys = get_system("galley-ald")
    spec = build("galley-ald", {"U": "1/2*k*x^2"})
    eq = euler_lagrange(spec, "x", sys.recipe).post_limit
    env = {"e": math.sqrt(1.5 * p["eps"]), "c": 1.0, "k": p["k"], "m": p["m"]}
    red = simulate_abraham_lorentz(p["m"], p["k"], p["eps"], p["x0"], p["v0"], None, _span(p), p["dt"]).reduced
    checks.append(_le("collapsed pair residual (order-reduced)", residual_check(eq, red, params=env), 1e-3))
    return files, man, checks


def _rcd(p, seed):
    g = Grid.interval(-p["L"] / 2, p["L"] / 2, int(p["points"]))
    fg = simulate_rcd(p["K"], p["gamma"], p["beta"], p["f"], g, None, _span(p),
                      snapshots=int(p["snapshots"]))
    checks = []
    if p["gamma"] == 0 and p["beta"] == 0 and p["f"] == 0:
        err = float(np.max(np.abs(fg.final - heat_kernel_gaussian(g.axis(), fg.times[-1], p["K"]))))
        checks.append(_le("heat kernel", err, 1e-3))
        checks.append(_le("mass drift", fg.drift("mass"), 1e-10))
    fine = simulate_rcd(p["K"], p["gamma"], p["beta"], p["f"], g, None, (0.0, min(_span(p)[1], 0.05)),
                        save_every=1)
    eq = derived_equation("rcd", {})
    checks.append(_le("derived equation residual",
                      residual_check(eq, fine, params=p, functions={"f": p["f"]}), 1e-3))
    return {"field.csv": fg.to_csv()}, fg.manifest(), checks


def _fp(variant, system):
    def run(p, seed):
        k = p["k"]
        g = Grid.interval(-p["L"] / 2, p["L"] / 2, int(p["points"]), "reflecting")
        kw = dict(f=lambda x: -k * x, D=p["D"], mu=p["mu"], nu=p["nu"], variant=variant, grid=g)
        fg = simulate_fokker_planck(t_span=_span(p), snapshots=int(p["snapshots"]), **kw)
        checks = []
        conserving = variant == "linear" or (variant == "nl2" and p["nu"] == 1) or \
            (variant == "nl1" and p["mu"] == 1)
        if conserving:
            key = "evolved_norm" if variant == "nl2" else "norm"
            checks.append(_le("normalization drift", fg.drift(key), 1e-6))
        if variant == "linear" and k > 0:
            x, P = fg.x, fg.final
            mean = float((P * x).sum() * fg.dx)
            var = float((P * x * x).sum() * fg.dx) - mean ** 2
            if p["t_end"] * k >= 5:
                checks.append(_le("stationary variance D/k (relative)", abs(var * k / p["D"] - 1), 0.01))
        # residual run on a doubled grid: the flux scheme is second order
        kw["grid"] = Grid.interval(-p["L"] / 2, p["L"] / 2, 2 * int(p["points"]), "reflecting")
        fine = simulate_fokker_planck(t_span=(0.0, 0.02), save_every=1, **kw)
        eq = derived_equation(system, {"f": "-k*x"})
        # bulk of the density, away from degenerate tails
        bulk = fine.x[fine.snapshots.min(axis=0) > 0.05 * fine.snapshots.max()]
        checks.append(_le("derived equation residual (bulk)", residual_check(
            eq, fine, params=p, x_range=(float(bulk.min()), float(bulk.max()))), 1e-3))
        return {"field.csv": fg.to_csv()}, fg.manifest(), checks
    return run


def _trough(u: np.ndarray, x: np.ndarray, h: float) -> tuple[float, float]:
    """Position and depth of the minimum, refined by a parabola through three points."""
    i = int(np.argmin(u))
    a, b, c = u[i - 1], u[i], u[(i + 1) % u.size]
    den = a - 2 * b + c
    d = 0.5 * (a - c) / den if den else 0.0
    return x[i] + d * h, b - 0.25 * (a - c) * d


def _soliton_speed_amplitude(fg: FieldGrid, L: float) -> tuple[float, float]:
    x = fg.x
    pos = [_trough(u, x, fg.dx)[0] for u in fg.snapshots]
    travelled = np.unwrap(np.asarray(pos) * 2 * np.pi / L) * L / (2 * np.pi)
    speed = float(np.polyfit(fg.times, travelled, 1)[0])
    amp = -float(np.mean([_trough(u, x, fg.dx)[1] for u in fg.snapshots[1:]]))
    return speed, amp


def _kdv(p, seed):
    L = p["L"]
    g = Grid.interval(-L / 2, L / 2, int(p["points"]))
    fg = simulate_kdv(g, p["c"], None, _span(p), scheme=p["scheme"], snapshots=int(p["snapshots"]))
    T = fg.times[-1]
    if p["scheme"] == "pseudo-spectral":
        exact = kdv_soliton(g.axis(), T, p["c"], 0.0, L)
        checks = [_le("soliton shape", float(np.max(np.abs(fg.final - exact))), 1e-3)]
    else:
        # second-order scheme: its O(h^2) phase error dominates the pointwise shape error
        speed, amp = _soliton_speed_amplitude(fg, L)
        checks = [_le("soliton speed (relative)", abs(speed / p["c"] - 1), 1e-2),
                  _le("soliton amplitude (relative)", abs(amp / (0.5 * p["c"]) - 1), 1e-2)]
    checks += [
        _le("mass drift", fg.drift("mass"), 1e-8),
        _le("L2 drift", fg.drift("l2"), 1e-5 if p["scheme"] == "pseudo-spectral" else 1e-3),
    ]
    fine = simulate_kdv(g, p["c"], None, (0.0, 0.1), scheme=p["scheme"], save_every=2 if
                        p["scheme"] == "pseudo-spectral" else 20)
    eq = derived_equation("kdv", {})
    bound = 1e-3 if p["scheme"] == "pseudo-spectral" else 5e-2
    checks.append(_le("derived equation residual", residual_check(eq, fine), bound))
    return {"field.csv": fg.to_csv()}, fg.manifest(), checks


def _llg(p, seed):
    H = (0.0, 0.0, p["H"])
    th = p["theta0"]
    tr = simulate_llg(H, p["g"], p["kc"], (math.sin(th), 0.0, math.cos(th)), _span(p), p["dt"])
    checks = [_le("norm drift", float(np.max(np.abs(tr.series["norm_error"]))), 1e-8),
              _le("implicit-form residual", implicit_form_residual(tr, H), 1e-6)]
    if p["kc"] > 0:
        checks.append(_le("energy non-increasing", float(np.max(np.diff(tr.series["energy"]))), 1e-12))
    if p["kc"] == 0:
        ph = np.unwrap(np.arctan2(tr["my"], tr["mx"]))
        w = abs(np.polyfit(tr.t, ph, 1)[0])
        ref = abs(1.0 / p["g"]) * abs(p["H"])
        checks.append(_le("precession frequency", abs(w - ref) / ref, 1e-3))
    return {"trajectory.csv": tr.to_csv()}, tr.manifest(), checks


def _ck(p, seed):
    r = simulate_caldirola_kanai(p["m"], p["omega0"], p["lambda"], p["q0"], p["p0"], _span(p), p["dt"])
    can, phys = r.canonical, r.physical
    checks = []
    if p["lambda"] == 0:
        H = can.series["H"]
        checks.append(_le("H conserved", float(np.max(np.abs(H - H[0])) / H[0]), 1e-8))
    else:
        E = phys.series["E"]
        checks.append(_le("mechanical energy non-increasing", float(np.max(np.diff(E))), 1e-12 * E[0]))
    exact = damped_closed_form(p["omega0"] ** 2, p["lambda"], p["q0"], p["p0"] / p["m"], can.t)
    checks.append(_le("damped closed form", float(np.max(np.abs(can["q"] - exact))), 1e-6))
    H = legendre_transform(build("caldirola-kanai", {}), "q")
    eq = hamilton_elimination(H)
    checks.append(_le("eliminated equation residual", residual_check(eq, can, params=p), 1e-4))
    return ({"canonical.csv": can.to_csv(), "physical.csv": phys.to_csv()},
            {"canonical": can.manifest(), "physical": phys.manifest()}, checks)


@dataclass(frozen=True)
class Simulation:
    system: str
    params: dict
    run: Callable
    stochastic: bool = False
    choices: dict = field(default_factory=dict)


_ALD_P = {"m": 1.0, "k": 1.0, "eps": 0.01, "x0": 1.0, "v0": 0.0, "t_end": 20.0, "dt": 1e-3}
_FP_P = {"D": 1.0, "k": 1.0, "mu": 1.0, "nu": 1.0, "L": 16.0, "points": 320, "t_end": 5.0,
         "snapshots": 20}

SIMULATIONS: dict[str, Simulation] = {s.system: s for s in [
    Simulation("dissipative-oscillator", {"m": 1.0, "gamma": 0.2, "k": 1.0, "x0": 1.0, "v0": 0.0,
                                          "t_end": 20.0, "dt": 1e-3}, _dissipative),
    Simulation("langevin", {"m": 1.0, "gamma0": 1.0, "D0": 1.0, "tau": 1.0, "alpha": 0.5, "N": 1000,
                            "t_end": 10.0, "dt": 1e-3, "checkpoints": 10}, _langevin, stochastic=True),
    Simulation("abraham-lorentz", dict(_ALD_P), _ald),
    Simulation("galley-ald", dict(_ALD_P), _galley),
    Simulation("rcd", {"K": 1.0, "gamma": 0.0, "beta": 0.0, "f": 0.0, "L": 20.0, "points": 400,
                       "t_end": 0.1, "snapshots": 20}, _rcd),
    Simulation("fp-linear", dict(_FP_P), _fp("linear", "fp-linear")),
    Simulation("fp-nonlinear-1", dict(_FP_P, mu=1.5, D=0.5, t_end=1.0), _fp("nl1", "fp-nonlinear-1")),
    Simulation("fp-nonlinear-2", dict(_FP_P, mu=0.5, t_end=1.0), _fp("nl2", "fp-nonlinear-2")),
    Simulation("kdv", {"c": 4.0, "L": 40.0, "points": 256, "t_end": 10.0, "snapshots": 20,
                       "scheme": "pseudo-spectral"}, _kdv,
               choices={"scheme": ("pseudo-spectral", "zabusky-kruskal")}),
    Simulation("llg", {"H": 1.0, "g": -1.0, "kc": 0.1, "theta0": 1.0, "t_end": 20.0, "dt": 1e-3}, _llg),
    Simulation("caldirola-kanai", {"m": 1.0, "omega0": 1.0, "lambda": 0.2, "q0": 1.0, "p0": 0.0,
                                   "t_end": 20.0, "dt": 1e-3}, _ck),
]}


def simulation_params(system: str) -> dict:
    get_system(system)
    try:
        return dict(SIMULATIONS[system].params)
    except KeyError:
        raise UnknownSystem(f"{system} (no numeric integrator)") from None


def run_simulation(system: str, overrides: dict | None = None, seed: int | None = None) -> SimOutput:
    """Run the default numeric experiment of ``system`` with parameter overrides."""
    sim = SIMULATIONS.get(system)
    if sim is None:
        get_system(system)
        raise UnknownSystem(f"{system} (no numeric integrator)")
    p = dict(sim.params)
    for k, v in (overrides or {}).items():
        if k not in p:
            raise KeyError(f"unknown simulation parameter {k!r} for {system}; known: {', '.join(p)}")
        if isinstance(p[k], str):
            allowed = sim.choices.get(k)
            if allowed and v not in allowed:
                raise ValueError(f"{k} must be one of {', '.join(allowed)}")
            p[k] = str(v)
        elif isinstance(p[k], int) and not isinstance(p[k], bool):
            p[k] = int(v)
        else:
            p[k] = float(v)
    if sim.stochastic and seed is None:
        raise ValueError(f"{system} is stochastic; a seed is required")
    files, manifest, checks = sim.run(p, seed)
    manifest = {"system": system, "params": p, "seed": seed, "result": manifest,
                "checks": [c.to_json() for c in checks]}
    return SimOutput(system, files, manifest, checks)
