"""Command-line front end: ``list | derive | verify | simulate | render``.

Exit codes: 0 success, 1 verification or invariant failure, 2 bad input
(parse errors, unknown systems, keys or parameters), 3 engine errors,
4 numeric failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .catalog import BadParameter, UnknownSystem, build, get_system, list_systems, verify
from .kernels import BadKernel
from .numeric.bridge import SIMULATIONS, run_simulation
from .numeric.core import NumericError
from .symbolic.errors import ParseError, SymbolicError
from .symbolic.expr import Const, Deformed, Func, Mul, Sym
from .symbolic.parse import parse, parse_kernel
from .symbolic.render import render
from .symbolic.simplify import simplify
from .symbolic.traverse import find
from .variational import (
    INTERVAL,
    EngineError,
    LagrangianSpec,
    LimitStep,
    euler_lagrange,
    orient_residual,
)

OUT_ENV = "DEFORMVAR_OUT_DIR"
FORMATS = ("plain", "latex", "sexpr")


class UsageError(Exception):
    """Bad command-line or config input (exit 2)."""


# config --------------------------------------------------------------------

# keys a config file may set besides system parameters
_OPTION_KEYS = {
    "list": {"json", "out", "section"},
    "derive": {"json", "out", "system", "lagrangian", "vars", "kernels", "no_limit", "format",
               "var", "alpha"},
    "verify": {"json", "out", "system", "all", "printed_target"},
    "simulate": {"json", "out", "system", "seed"},
    "render": {"json", "out", "system", "expression", "format"},
}
_BOOL_KEYS = {"json", "no_limit", "all", "printed_target"}


def read_config(path: str) -> dict[str, str]:
    """Flat ``key=value`` file; ``#`` starts a comment, blank lines are skipped."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    out: dict[str, str] = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value, got {raw.strip()!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        if not k:
            raise UsageError(f"{path}:{n}: empty key")
        if k in out:
            raise UsageError(f"{path}:{n}: duplicate key {k!r}")
        out[k.replace("-", "_")] = v
    return out


def _as_bool(key, v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"{key} must be true or false, got {v!r}")


def _key_value(items) -> dict[str, str]:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise UsageError(f"expected name=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _extra_flags(extra: list[str]) -> dict[str, str]:
    """``--name value`` / ``--name=value`` pairs left over by argparse."""
    out: dict[str, str] = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or len(tok) < 3:
            raise UsageError(f"unexpected argument {tok!r}")
        if "=" in tok:
            k, v = tok[2:].split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise UsageError(f"{tok} needs a value")
            k, v = tok[2:], extra[i + 1]
            i += 2
        out[k] = v
    return out


def resolve(args, extra: list[str]) -> tuple[dict, dict]:
    """Merge defaults < config file < flags into (options, parameters)."""
    cmd = args.command
    allowed = _OPTION_KEYS[cmd]
    file_cfg = read_config(args.config) if args.config else {}
    opts: dict = {}
    params: dict[str, str] = {}
    for k, v in file_cfg.items():
        if k in allowed or k == "seed":
            opts[k] = v
        elif cmd in ("derive", "verify", "simulate"):
            params[k] = v
        else:
            raise UsageError(f"unknown config key {k!r} for {cmd}")
    for k in allowed | {"seed"}:
        v = getattr(args, k, None)
        if v is not None and v is not False:
            opts[k] = v
    for k in _BOOL_KEYS & opts.keys():
        opts[k] = _as_bool(k, opts[k])
    if "seed" in opts:
        try:
            opts["seed"] = int(opts["seed"])
        except ValueError:
            raise UsageError(f"seed must be an integer, got {opts['seed']!r}") from None
    params.update(_key_value(getattr(args, "param", None)))
    flags = _extra_flags(extra)
    if flags and cmd != "simulate":
        raise UsageError(f"unknown option --{next(iter(flags))}")
    params.update(flags)
    return opts, params


def effective_config(opts: dict, params: dict) -> str:
    """Config text that replays the run."""
    lines = []
    for k in sorted(opts):
        v = opts[k]
        if k in ("out", "json"):
            continue
        lines.append(f"{k} = {str(v).lower() if isinstance(v, bool) else v}")
    for k in sorted(params):
        lines.append(f"{k} = {params[k]}")
    return "\n".join(lines) + "\n"


# output ----------------------------------------------------------------------

def _emit(text: str, out: str | None):
    if out:
        p = Path(out)
        if p.parent and not p.parent.exists():
            p.parent.mkdir(parents=True)
        p.write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False)


# commands ------------------------------------------------------------------------

def cmd_list(opts, params):
    rows = list_systems(opts.get("section"))
    if opts.get("json"):
        return _dump([{"id": i, "section": s, "description": d,
                       "simulate": i in SIMULATIONS} for i, s, d in rows]), 0
    width = max((len(r[0]) for r in rows), default=0)
    return "\n".join(f"{i:<{width}}  {s:<5} {d}" for i, s, d in rows), 0


_BUILTINS = {"exp", "log", "sin", "cos", "sqrt"}


def _parse_vars(text: str, L):
    funcs = {}
    for n in find(L, lambda n: isinstance(n, Func)):
        if n.name not in _BUILTINS and all(isinstance(a, Sym) for a in n.args):
            funcs.setdefault(n.name, Func(n.name, n.args))
    if not text:
        return tuple(funcs.values())
    out = []
    for item in text.replace(";", " ").split():
        if "(" in item:
            f = parse(item)
            if not isinstance(f, Func):
                raise UsageError(f"--vars entry {item!r} is not a function like x(t)")
            out.append(f)
        elif item in funcs:
            out.append(funcs[item])
        else:
            raise UsageError(f"variable {item!r} does not occur in the Lagrangian")
    return tuple(out)


def _parse_kernels(text: str, L) -> dict:
    kernels = {}
    for node in find(L, lambda n: isinstance(n, Deformed)):
        kernels.setdefault(node.var, node.kernel)
    for item in (text or "").split(";"):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise UsageError(f"--kernels entry {item!r} should read var=kernel")
        var, k = item.split("=", 1)
        kernels[var.strip()] = parse_kernel(k.strip())
    return kernels


def _derive_results(opts, params):
    limits: tuple[LimitStep, ...]
    if opts.get("lagrangian"):
        if opts.get("system"):
            raise UsageError("give either a system id or --lagrangian, not both")
        L = parse(opts["lagrangian"])
        variables = _parse_vars(opts.get("vars", ""), L)
        if not variables:
            raise UsageError("the Lagrangian has no dependent function to vary; use --vars")
        spec = LagrangianSpec(L, variables, _parse_kernels(opts.get("kernels", ""), L),
                              name="lagrangian")
        limits = (INTERVAL,)
        if opts.get("alpha"):
            # order to 1 first: (t - a)^(1 - 2 alpha) only becomes polynomial afterwards
            limits = (LimitStep("alpha", opts["alpha"]), INTERVAL)
        names = [v.name for v in variables]
        system = ""
    else:
        if not opts.get("system"):
            raise UsageError("derive needs a system id or --lagrangian")
        sysspec = get_system(opts["system"])
        spec = build(sysspec.id, params)
        limits = sysspec.recipe
        names = list(sysspec.functions)
        system = sysspec.id
    if opts.get("var"):
        names = [opts["var"]]
    if opts.get("no_limit"):
        limits = ()
    dyn = [v.name for v in spec.variables]
    results = []
    for n in names:
        r = euler_lagrange(spec, n, limits, system=system)
        # one overall sign for pre-limit, post-limit and dropped terms
        ref = r.pre_limit if opts.get("no_limit") else r.post_limit
        if orient_residual(ref, dyn) != ref:
            r.pre_limit = simplify(Mul(Const(-1), r.pre_limit))
            r.post_limit = simplify(Mul(Const(-1), r.post_limit))
            r.dropped_terms = [simplify(Mul(Const(-1), d)) for d in r.dropped_terms]
        results.append(r)
    return results


def cmd_derive(opts, params):
    fmt = opts.get("format", "plain")
    if fmt not in FORMATS:
        raise UsageError(f"--format must be one of {', '.join(FORMATS)}")
    results = _derive_results(opts, params)
    if opts.get("json"):
        return _dump([r.to_json() for r in results]), 0
    lines = []
    for r in results:
        head = f"[{r.system}] " if r.system else ""
        lines.append(f"{head}variable {r.variable}")
        lines.append(f"  pre-limit:  {render(r.pre_limit, fmt)} = 0")
        if not opts.get("no_limit"):
            for d in r.limits_applied:
                lines.append(f"  applied:    {d}")
            for d in r.dropped_terms:
                lines.append(f"  dropped:    {render(d, fmt)}")
            lines.append(f"  post-limit: {render(r.post_limit, fmt)} = 0")
    return "\n".join(lines), 0


def cmd_verify(opts, params):
    if opts.get("all"):
        if opts.get("system"):
            raise UsageError("give either a system id or --all")
        if params:
            raise UsageError("parameters cannot be combined with --all")
        ids = [r[0] for r in list_systems()]
    elif opts.get("system"):
        ids = [opts["system"]]
    else:
        raise UsageError("verify needs a system id or --all")
    printed = bool(opts.get("printed_target"))
    reports = [verify(i, params or None, printed_target=printed) for i in ids]
    code = 0 if all(r.ok for r in reports) else 1
    if opts.get("json"):
        body = {"verdict": "MATCH" if code == 0 else "FAIL", "reports": [r.to_json() for r in reports]}
        return _dump(body), code
    lines = [r.text() for r in reports]
    if len(reports) > 1:
        n_ok = sum(r.ok for r in reports)
        lines.append(f"{n_ok}/{len(reports)} MATCH")
    return "\n".join(lines), code


def _out_dir(opts, system: str) -> Path:
    if opts.get("out"):
        return Path(opts["out"])
    return Path(os.environ.get(OUT_ENV, ".")) / system


def _write_outputs(target: Path, files: dict[str, str]):
    """Write all files or none: anything created here is removed on failure."""
    created_dir = not target.exists()
    written: list[Path] = []
    try:
        target.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            p = target / name
            p.write_text(text)
            written.append(p)
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        if created_dir and target.exists() and not any(target.iterdir()):
            target.rmdir()
        raise


def cmd_simulate(opts, params):
    system = opts.get("system")
    if not system:
        raise UsageError("simulate needs a system id")
    get_system(system)
    if system not in SIMULATIONS:
        raise UsageError(f"{system} has no numeric integrator; simulate supports "
                         f"{', '.join(SIMULATIONS)}")
    sim = SIMULATIONS[system]
    unknown = sorted(set(params) - set(sim.params))
    if unknown:
        raise UsageError(f"unknown parameter(s) for {system}: {', '.join(unknown)}; "
                         f"known: {', '.join(sim.params)}")
    if sim.stochastic and opts.get("seed") is None:
        raise UsageError(f"{system} is stochastic: --seed is required")
    try:
        result = run_simulation(system, params, opts.get("seed") if sim.stochastic else None)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, (NumericError, FloatingPointError)):
            raise
        raise UsageError(str(exc)) from None
    files = dict(result.files)
    files["manifest.json"] = _dump(result.manifest) + "\n"
    files["config.txt"] = effective_config(
        {k: v for k, v in opts.items() if k != "seed" or sim.stochastic}, params)
    target = _out_dir(opts, system)
    _write_outputs(target, files)
    code = 0 if result.ok else 1
    if opts.get("json"):
        body = {"system": system, "out": str(target), "files": sorted(files),
                "checks": [c.to_json() for c in result.checks], "passed": result.ok}
        return _dump(body), code
    lines = [f"{system}: wrote {', '.join(sorted(files))} to {target}"]
    lines += [c.line() for c in result.checks]
    return "\n".join(lines), code


def cmd_render(opts, params):
    fmt = opts.get("format", "plain")
    if fmt not in FORMATS:
        raise UsageError(f"--format must be one of {', '.join(FORMATS)}")
    if opts.get("system"):
        e = build(opts["system"], params).L
    elif opts.get("expression"):
        e = parse(opts["expression"])
    else:
        raise UsageError("render needs an expression or --system")
    text = render(e, fmt)
    if opts.get("json"):
        return _dump({"plain": render(e, "plain"), "latex": render(e, "latex"),
                      "sexpr": render(e, "sexpr")}), 0
    return text, 0


COMMANDS = {"list": cmd_list, "derive": cmd_derive, "verify": cmd_verify,
            "simulate": cmd_simulate, "render": cmd_render}


# parser ----------------------------------------------------------------------------

def _globals(p: argparse.ArgumentParser, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--json", action="store_true", default=d or False, help="machine-readable output")
    p.add_argument("--out", default=d, help="output file (directory for simulate)")
    p.add_argument("--seed", default=d, help="seed for stochastic runs")
    p.add_argument("--config", default=d, help="key=value config file; flags take precedence")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="deformvar", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"deformvar {__version__}")
    _globals(ap, suppress=False)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list", help="list catalog systems")
    _globals(p, True)
    p.add_argument("--section", help="only systems of this section id, e.g. 5.7")

    p = sub.add_parser("derive", help="derive Euler-Lagrange residuals")
    _globals(p, True)
    p.add_argument("system", nargs="?", help="catalog id")
    p.add_argument("--lagrangian", help="Lagrangian text, e.g. \"1/2*m*d(x,t)^2\"")
    p.add_argument("--vars", help="dynamical variables, e.g. \"x(t) z(t)\" (default: all)")
    p.add_argument("--kernels", help="var=kernel pairs separated by ';', e.g. \"t=conf(1/2,a)\"")
    p.add_argument("--var", help="derive only this variable")
    p.add_argument("--alpha", help="also take the limit of this order symbol to 1")
    p.add_argument("--no-limit", action="store_true", default=None, help="print the pre-limit form only")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--param", action="append", metavar="NAME=VALUE", help="system parameter")

    p = sub.add_parser("verify", help="derive and match catalog targets")
    _globals(p, True)
    p.add_argument("system", nargs="?")
    p.add_argument("--all", action="store_true", default=None)
    p.add_argument("--printed-target", action="store_true", default=None,
                   help="use the uncorrected printed Lagrangian and target")
    p.add_argument("--param", action="append", metavar="NAME=VALUE")

    p = sub.add_parser("simulate", help="run a numeric experiment; --NAME VALUE overrides parameters")
    _globals(p, True)
    p.add_argument("system", nargs="?")

    p = sub.add_parser("render", help="render an expression or a catalog Lagrangian")
    _globals(p, True)
    p.add_argument("expression", nargs="?")
    p.add_argument("--system")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--param", action="append", metavar="NAME=VALUE")
    return ap


_GLOBAL_FLAGS = {"--json", "--out", "--seed", "--config", "-h", "--help", "--version"}
_VALUE_FLAGS = {"--out", "--seed", "--config"}


def _split_simulate(argv: list[str]) -> tuple[list[str], list[str]]:
    """Pull ``--name value`` parameter overrides out of a simulate command line.

    Done before argparse so an override value is never taken for the system id.
    """
    if "simulate" not in argv:
        return argv, []
    i = argv.index("simulate") + 1
    keep, extra = argv[:i], []
    while i < len(argv):
        tok = argv[i]
        name = tok.split("=", 1)[0]
        if tok.startswith("--") and name not in _GLOBAL_FLAGS:
            extra.append(tok)
            if "=" not in tok and i + 1 < len(argv):
                extra.append(argv[i + 1])
                i += 1
        else:
            keep.append(tok)
            if name in _VALUE_FLAGS and "=" not in tok and i + 1 < len(argv):
                keep.append(argv[i + 1])
                i += 1
        i += 1
    return keep, extra


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    argv, overrides = _split_simulate(argv)
    args, extra = ap.parse_known_args(argv)
    extra += overrides
    if extra and args.command != "simulate":
        ap.error(f"unrecognized arguments: {' '.join(extra)}")
    try:
        opts, params = resolve(args, extra)
        text, code = COMMANDS[args.command](opts, params)
        out = opts.get("out") if args.command != "simulate" else None
        _emit(text, out)
        return code
    except (UsageError, UnknownSystem, BadParameter, ParseError, BadKernel) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2
    except (EngineError, SymbolicError) as exc:
        print(f"engine error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except (NumericError, FloatingPointError) as exc:
        print(f"numeric error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
