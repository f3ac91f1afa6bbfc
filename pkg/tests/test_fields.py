import warnings

import numpy as np
import pytest

from deformvar.numeric import (
    CFLViolation,
    Grid,
    NegativeDensity,
    heat_kernel_gaussian,
    kdv_soliton,
    residual_check,
    simulate_fokker_planck,
    simulate_kdv,
    simulate_rcd,
)
from deformvar.symbolic import parse


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(0.0, 0.1, 2)
    with pytest.raises(ValueError):
        Grid(0.0, 0.1, 10, "open")
    g = Grid.interval(0, 1, 10, "reflecting")
    assert g.axis()[0] == pytest.approx(0.05)


# reaction-convection-diffusion

def test_heat_kernel():
    g = Grid.interval(-10, 10, 400)
    fg = simulate_rcd(grid=g, t_span=(0, 0.1))
    exact = heat_kernel_gaussian(fg.x, fg.times[-1])
    assert np.max(np.abs(fg.final - exact)) < 1e-3
    assert fg.drift("mass") < 1e-10


def test_decay_term():
    g = Grid.interval(-10, 10, 200)
    fg = simulate_rcd(beta=0.5, grid=g, t_span=(0, 0.2))
    m = fg.conserved["mass"]
    assert m[-1] / m[0] == pytest.approx(np.exp(-0.1), rel=1e-6)


def test_rcd_residual():
    g = Grid.interval(-10, 10, 400)
    fg = simulate_rcd(grid=g, t_span=(0, 0.1), save_every=10)
    eq = parse("U[1,0](t,x) - K*U[0,2](t,x)")
    assert residual_check(eq, fg, params={"K": 1.0}) < 1e-3


def test_rcd_two_dimensional_mass():
    g = Grid((-5.0, -5.0), 0.25, 40)
    fg = simulate_rcd(K=(1.0, 0.5), gamma=(0.5, 0.0), grid=g, t_span=(0, 0.1))
    assert fg.snapshots.shape[1:] == (40, 40)
    assert fg.drift("mass") < 1e-10


def test_rcd_stability_bound():
    with pytest.raises(CFLViolation):
        simulate_rcd(grid=Grid.interval(-10, 10, 400), t_span=(0, 0.1), dt=0.01)


# Fokker-Planck

def ou(x):
    return -x


def test_fp_relaxes_to_ou_variance():
    fg = simulate_fokker_planck(ou, D=1.0, t_span=(0, 5))
    x, P = fg.x, fg.final
    h = fg.dx
    mean = (x * P).sum() * h
    var = ((x - mean) ** 2 * P).sum() * h
    assert abs(var - 1.0) < 1e-2
    assert fg.drift("norm") < 1e-12
    assert P.min() >= 0


@pytest.mark.parametrize("variant,kw,key", [
    ("nl1", {"mu": 1.0}, "norm"),
    ("nl2", {"mu": 0.5}, "evolved_norm"),  # the flux form conserves the integral of P^mu
])
def test_fp_nonlinear_conservation_and_positivity(variant, kw, key):
    with warnings.catch_warnings():
        warnings.simplefilter("error", NegativeDensity)
        fg = simulate_fokker_planck(ou, variant=variant, t_span=(0, 0.5), **kw)
    assert fg.drift(key) < 1e-10
    assert fg.snapshots.min() >= 0


def test_fp_extra_term_changes_norm():
    # the non-divergence term removes probability when mu > 1
    fg = simulate_fokker_planck(ou, variant="nl1", mu=1.5, D=0.5, t_span=(0, 0.5))
    n = fg.conserved["norm"]
    assert np.all(np.diff(n) < 0) and fg.snapshots.min() >= 0


def test_fp_linear_residual():
    g = Grid.interval(-8, 8, 640, "reflecting")
    fg = simulate_fokker_planck(ou, D=1.0, grid=g, t_span=(0, 0.02), save_every=1)
    eq = parse("P[1,0](t,x) + d(f(x)*P(t,x),x) - D*P[0,2](t,x)", functions={"f": ("x",)})
    r = residual_check(eq, fg, params={"D": 1.0}, functions={"f": lambda x: -x}, x_range=(-5, 5))
    assert r < 1e-3


def test_fp_rejects_bad_initial_data():
    with pytest.raises(ValueError):
        simulate_fokker_planck(ou, p0=lambda x: np.exp(-x * x))
    with pytest.raises(ValueError):
        simulate_fokker_planck(ou, variant="nl3")


# KdV

def test_soliton_shape_is_preserved():
    g = Grid.interval(-20, 20, 256)
    fg = simulate_kdv(g, c=4.0, t_span=(0, 2))
    L = 40.0
    exact = kdv_soliton(fg.x, fg.times[-1], 4.0, 0.0, L)
    assert np.max(np.abs(fg.final - exact)) < 1e-3
    assert fg.drift("mass") < 1e-8
    assert fg.drift("l2") < 1e-5


def test_soliton_invariants():
    x = np.linspace(-40, 40, 8001)
    phi = kdv_soliton(x)
    h = x[1] - x[0]
    assert phi.sum() * h == pytest.approx(-4.0, abs=1e-8)
    assert (phi ** 2).sum() * h == pytest.approx(16 / 3, abs=1e-8)


def test_kdv_residual():
    g = Grid.interval(-20, 20, 256)
    fg = simulate_kdv(g, t_span=(0, 0.5), save_every=10)
    eq = parse("phi[1,0](t,x) + phi[0,3](t,x) - 6*phi(t,x)*phi[0,1](t,x)")
    assert residual_check(eq, fg, field="phi") < 1e-3


def test_zabusky_kruskal_scheme():
    g = Grid.interval(-20, 20, 256)
    fg = simulate_kdv(g, scheme="zabusky-kruskal", t_span=(0, 1))
    assert fg.drift("mass") < 1e-8
    assert abs(fg.final.min() + 2.0) < 2e-2


def test_kdv_options():
    with pytest.raises(ValueError):
        simulate_kdv(scheme="leapfrog")
    with pytest.raises(CFLViolation):
        simulate_kdv(dt=1.0, t_span=(0, 2))
