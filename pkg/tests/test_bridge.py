import jsonschema
import pytest

from deformvar import schemas
from deformvar.catalog import UnknownSystem
from deformvar.numeric.bridge import SIMULATIONS, derived_equation, run_simulation, simulation_params
from deformvar.symbolic import parse

# short runs that still exercise every check of each system
QUICK = {
    "dissipative-oscillator": {"t_end": 5},
    "langevin": {"N": 200, "t_end": 2, "dt": 1e-2, "checkpoints": 4},
    "abraham-lorentz": {"t_end": 5},
    "galley-ald": {"t_end": 5},
    "rcd": {"t_end": 0.05},
    "fp-linear": {"t_end": 0.5},
    "fp-nonlinear-1": {"t_end": 0.2},
    "fp-nonlinear-2": {"t_end": 0.2},
    "kdv": {"t_end": 1},
    "llg": {"t_end": 5},
    "caldirola-kanai": {"t_end": 5},
}


def test_every_integrable_system_has_a_run():
    assert set(SIMULATIONS) == set(QUICK)
    assert "kdv-deformed" not in SIMULATIONS


@pytest.mark.parametrize("system", sorted(QUICK))
def test_quick_runs_pass_their_checks(system):
    out = run_simulation(system, QUICK[system], seed=1 if SIMULATIONS[system].stochastic else None)
    assert out.ok, [c.line() for c in out.checks]
    assert out.checks
    jsonschema.validate(out.manifest, schemas.load("manifest"))
    assert all(text.endswith("\n") for text in out.files.values())


def test_overrides_are_typed_and_checked():
    with pytest.raises(KeyError):
        run_simulation("llg", {"spin": 1})
    with pytest.raises(ValueError):
        run_simulation("kdv", {"scheme": "leapfrog"})
    with pytest.raises(ValueError):
        run_simulation("langevin", {"N": 10})
    with pytest.raises(UnknownSystem):
        run_simulation("kdv-deformed")
    out = run_simulation("dissipative-oscillator", {"t_end": "2", "gamma": "0"})
    assert out.manifest["params"]["t_end"] == 2.0


def test_zabusky_kruskal_run():
    out = run_simulation("kdv", {"scheme": "zabusky-kruskal", "t_end": 1})
    assert out.ok, [c.line() for c in out.checks]


def test_failed_invariant_is_reported():
    # coarse steps break the closed-form comparison without any exception
    out = run_simulation("dissipative-oscillator", {"dt": 0.5, "t_end": 20})
    assert not out.ok
    assert any("FAIL" in c.line() for c in out.checks)


def test_simulation_params_are_copies():
    p = simulation_params("llg")
    p["kc"] = 99
    assert simulation_params("llg")["kc"] != 99


def test_derived_equation_feeds_the_residual():
    eq = derived_equation("dissipative-oscillator", {"U": "1/2*k*x^2"})
    assert eq == parse("-m*d(x,t,2) - gamma*d(x,t) - k*x(t)")
