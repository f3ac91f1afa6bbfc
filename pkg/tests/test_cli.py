import json
import subprocess
import sys

import jsonschema
import pytest

from deformvar import schemas
from deformvar.cli import main, read_config, UsageError


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def check_schema(obj, name):
    jsonschema.validate(obj, schemas.load(name))


# list / render / derive

def test_list(capsys):
    code, out, _ = run(capsys, "list")
    assert code == 0 and "caldirola-kanai" in out
    code, out, _ = run(capsys, "list", "--json", "--section", "5.7")
    body = json.loads(out)
    check_schema(body, "list")
    assert [e["id"] for e in body] == ["fp-nonlinear-1", "fp-nonlinear-2"]


def test_render(capsys):
    code, out, _ = run(capsys, "render", "x^2 + 1", "--format", "latex")
    assert code == 0 and out.strip() == "1 + x^{2}"
    code, out, _ = run(capsys, "render", "--system", "kdv", "--json")
    check_schema(json.loads(out), "render")


def test_derive_system(capsys):
    code, out, _ = run(capsys, "derive", "dissipative-oscillator")
    assert code == 0
    assert "U'(x(t)) + gamma*x'(t) + m*x''(t) = 0" in out


def test_derive_free_lagrangian(capsys):
    code, out, _ = run(capsys, "derive", "--lagrangian", "1/2*m*d(x,t)^2")
    assert code == 0 and "m*x''(t) = 0" in out


def test_derive_with_kernel_and_json(capsys):
    code, out, _ = run(capsys, "derive", "--lagrangian", "1/2*m*D[conf(alpha,a),t](x)^2",
                       "--kernels", "t=conf(alpha,a)", "--alpha", "alpha", "--json")
    assert code == 0
    body = json.loads(out)
    check_schema(body, "derive")


def test_derive_parse_error_exits_2(capsys):
    code, _, err = run(capsys, "derive", "--lagrangian", "1/2*m*")
    assert code == 2 and "error" in err


def test_derive_bad_kernel_exits_2(capsys):
    code, _, _ = run(capsys, "derive", "--lagrangian", "D[conf(2,a),t](x)^2")
    assert code == 2


# verify

def test_verify_all(capsys):
    code, out, _ = run(capsys, "verify", "--all", "--json")
    assert code == 0
    body = json.loads(out)
    check_schema(body, "verify")
    assert body["verdict"] == "MATCH" and len(body["reports"]) == 12


def test_verify_printed_target_reports_diff(capsys):
    code, out, _ = run(capsys, "verify", "kdv", "--printed-target")
    assert code == 1 and "diff:" in out


def test_verify_unknown_system(capsys):
    code, _, err = run(capsys, "verify", "nope")
    assert code == 2 and "nope" in err


def test_verify_unknown_parameter(capsys):
    code, _, _ = run(capsys, "verify", "kdv", "--param", "c=3")
    assert code == 2


def test_global_flags_after_subcommand(capsys):
    a = run(capsys, "--json", "list")[1]
    b = run(capsys, "list", "--json")[1]
    assert a == b


# simulate

def test_simulate_writes_outputs(tmp_path, capsys):
    out_dir = tmp_path / "osc"
    code, out, _ = run(capsys, "simulate", "dissipative-oscillator", "--t_end", "2", "--out",
                       str(out_dir), "--json")
    assert code == 0
    body = json.loads(out)
    check_schema(body, "simulate")
    assert sorted(p.name for p in out_dir.iterdir()) == ["config.txt", "manifest.json", "trajectory.csv"]
    manifest = json.loads((out_dir / "manifest.json").read_text())
    check_schema(manifest, "manifest")


def test_simulate_replay_is_byte_identical(tmp_path, capsys):
    first = tmp_path / "a"
    code, _, _ = run(capsys, "simulate", "langevin", "--seed", "5", "--N", "20", "--t_end", "1",
                     "--dt", "0.01", "--out", str(first))
    assert code == 0
    second = tmp_path / "b"
    code, _, _ = run(capsys, "simulate", "--config", str(first / "config.txt"), "--out", str(second))
    assert code == 0
    for p in first.iterdir():
        assert (second / p.name).read_bytes() == p.read_bytes(), p.name


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# oscillator\nsystem = dissipative-oscillator\nt_end = 2\ngamma = 0.5\n")
    out_dir = tmp_path / "o"
    code, _, _ = run(capsys, "simulate", "--config", str(cfg), "--gamma", "0.1", "--out", str(out_dir))
    assert code == 0
    params = json.loads((out_dir / "manifest.json").read_text())["params"]
    assert params["gamma"] == 0.1 and params["t_end"] == 2.0


def test_read_config_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("a = 1\na = 2\n")
    with pytest.raises(UsageError):
        read_config(str(bad))
    bad.write_text("just words\n")
    with pytest.raises(UsageError):
        read_config(str(bad))
    with pytest.raises(UsageError):
        read_config(str(tmp_path / "missing.cfg"))


def test_out_dir_from_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("DEFORMVAR_OUT_DIR", str(tmp_path))
    code, _, _ = run(capsys, "simulate", "caldirola-kanai", "--t_end", "1")
    assert code == 0
    assert (tmp_path / "caldirola-kanai" / "manifest.json").exists()


@pytest.mark.parametrize("argv", [
    ["simulate", "langevin", "--t_end", "1"],         # missing seed
    ["simulate", "kdv-deformed"],                      # no integrator
    ["simulate", "llg", "--spin", "1"],                # unknown parameter
    ["simulate", "kdv", "--scheme", "leapfrog"],       # bad choice
    ["simulate"],                                      # no system
])
def test_simulate_usage_errors(argv, capsys, tmp_path):
    code, _, err = run(capsys, *argv, "--out", str(tmp_path / "x"))
    assert code == 2 and err.startswith("error")
    assert not (tmp_path / "x").exists()


def test_numeric_failure_leaves_no_files(tmp_path, capsys):
    target = tmp_path / "llg"
    code, _, err = run(capsys, "simulate", "llg", "--dt", "5", "--out", str(target))
    assert code == 4 and "numeric error" in err
    assert not target.exists()


def test_failed_check_exits_1(tmp_path, capsys):
    code, out, _ = run(capsys, "simulate", "dissipative-oscillator", "--dt", "0.5",
                       "--out", str(tmp_path / "o"))
    assert code == 1 and "FAIL" in out


def test_console_script():
    r = subprocess.run([sys.executable, "-m", "deformvar.cli", "list"], capture_output=True, text=True)
    assert r.returncode == 0 and "kdv" in r.stdout
