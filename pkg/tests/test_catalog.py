import time

import jsonschema
import pytest

from deformvar import schemas
from deformvar.catalog import (
    BadParameter,
    UnknownSystem,
    build,
    get_system,
    hamiltonian_of,
    list_systems,
    verify,
    verify_all,
)
from deformvar.symbolic import parse

IDS = [s for s, _, _ in list_systems()]

# entries whose printed Lagrangian already produces the printed equation
PRINTED_AGREES = {"rcd", "fp-linear", "kdv-deformed"}


def test_catalog_contents():
    assert IDS == [
        "dissipative-oscillator", "langevin", "abraham-lorentz", "galley-ald", "rcd",
        "fp-linear", "fp-nonlinear-1", "fp-nonlinear-2", "kdv", "kdv-deformed", "llg",
        "caldirola-kanai",
    ]
    assert [s for s, _, _ in list_systems("5.7")] == ["fp-nonlinear-1", "fp-nonlinear-2"]


def test_unknown_system():
    with pytest.raises(UnknownSystem):
        get_system("harmonic-balance")


def test_unknown_parameter():
    with pytest.raises(BadParameter):
        build("kdv", {"speed": 3})
    with pytest.raises(BadParameter):
        build("dissipative-oscillator", {"gamma": "1 +"})


@pytest.mark.parametrize("sid", IDS)
def test_every_entry_matches(sid):
    r = verify(sid)
    assert r.verdict == "MATCH", r.text()
    assert r.ok and r.diff is None


@pytest.mark.parametrize("sid", IDS)
def test_printed_target_mode(sid):
    r = verify(sid, printed_target=True)
    expected = "MATCH" if sid in PRINTED_AGREES else "MISMATCH"
    assert r.verdict == expected
    assert r.decisions[0].startswith("printed Lagrangian")
    if expected == "MISMATCH":
        assert r.diff is not None


def test_report_json_validates():
    schema = schemas.load("report")
    for r in verify_all():
        jsonschema.validate(r.to_json(), schema)


def test_verify_all_is_fast():
    start = time.perf_counter()
    reports = verify_all()
    assert time.perf_counter() - start < 30
    assert len(reports) == 12


def test_parameters_bind_into_lagrangian():
    L = build("dissipative-oscillator", {"gamma": 0}).L
    assert "gamma" not in str(L)
    assert verify("dissipative-oscillator", {"m": 2}).ok


def test_hamiltonian_of():
    assert hamiltonian_of() == parse("exp(-lambda*t)*p^2/(2*m) + 1/2*m*exp(lambda*t)*omega0^2*q^2")
    with pytest.raises(UnknownSystem):
        hamiltonian_of("kdv")


def test_entries_carry_provenance():
    for sid in IDS:
        s = get_system(sid)
        assert s.section and s.kernel_convention
        assert s.recipe or sid == "caldirola-kanai"  # no deformation offset to remove
