"""Acceptance criteria 1-6, each run at its stated tolerance and time budget.

Every test prints one ``CRITERION n: PASS|FAIL`` line; the lines are also
repeated in the terminal summary.
"""

import time

import numpy as np

import test_kernels as kernel_props
import test_symbolic as symbolic_props
from deformvar.catalog import build, get_system, verify_all
from deformvar.cli import main
from deformvar.kernels import ConformableInterval, Hausdorff, Identity, LambdaExp, expand_deformed
from deformvar.numeric import (
    Grid,
    damped_closed_form,
    heat_kernel_gaussian,
    kdv_soliton,
    sbm_moments,
    simulate_caldirola_kanai,
    simulate_dissipative_oscillator,
    simulate_fokker_planck,
    simulate_kdv,
    simulate_langevin_sbm,
    simulate_llg,
    simulate_rcd,
)
from deformvar.numeric.bridge import run_simulation
from deformvar.symbolic import Add, Const, Deformed, Mul, differentiate, parse, simplify
from deformvar.variational import euler_lagrange, legendre_transform, orient_residual

RESULTS: list[str] = []

# sympy solution of the SBM moment ODEs (m=gamma0=D0=tau=1, alpha=1/2, v0=0) at t=1..10
SBM_MSD = [0.2686886081684748, 1.1160371571469057, 2.2392026084999803, 3.4419841048665503,
           4.635398523781575, 5.782616040845537, 6.870706498535793, 7.897526502178053,
           8.865634217625862, 9.779437220365809]


def report(n: int, failures: list[str], seconds: float, budget: float, detail: str = ""):
    ok = not failures and seconds <= budget
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} ({seconds:.1f} s of {budget:g} s)"
    if detail:
        line += f" {detail}"
    if failures:
        line += " failures: " + "; ".join(failures)
    print(line)
    RESULTS.append(line)
    assert ok, line


def post_limit(sid, params=None, var=None):
    s = get_system(sid)
    spec = build(sid, params)
    r = euler_lagrange(spec, var or next(iter(s.functions)), s.recipe).post_limit
    return orient_residual(r, [v.name for v in spec.variables])


def same(a, b) -> bool:
    return simplify(Add(a, Mul(Const(-1), b))) == Const(0)


def test_criterion_1_verify_all():
    start = time.perf_counter()
    reports = verify_all()
    seconds = time.perf_counter() - start
    failures = [f"{r.system}: {r.verdict}" for r in reports if not r.ok]
    if len(reports) != 12:
        failures.append(f"{len(reports)} systems instead of 12")
    report(1, failures, seconds, 10, f"{sum(r.ok for r in reports)}/12 MATCH")


def test_criterion_2_degenerations():
    start = time.perf_counter()
    failures = []

    def expect(name, cond):
        if not cond:
            failures.append(name)

    f = parse("x(t)^2 + t*x(t) + exp(t/3)")
    df = differentiate(f, "t")
    for name, k in [("conformable alpha=1", ConformableInterval(Const(1), parse("a"))),
                    ("lambda-exp lambda=0", LambdaExp(Const(0))),
                    ("halved lambda-exp lambda=0", LambdaExp(Const(0), halved=True)),
                    ("hausdorff alpha=1 unit scale", Hausdorff(Const(1), Const(1))),
                    ("identity", Identity())]:
        expect(name, expand_deformed(Deformed(k, "t", f)) == df)

    expect("galley alpha=1 collapses to radiation reaction",
           same(post_limit("galley-ald", {"alpha": 1}), post_limit("abraham-lorentz")))
    expect("caldirola-kanai lambda=0 gives the harmonic oscillator",
           legendre_transform(build("caldirola-kanai", {"lambda": 0}), "q")
           == parse("p^2/(2*m) + 1/2*m*omega0^2*q^2"))
    conservative = parse("m*d(x,t,2) + U'(x(t))")
    expect("dissipative gamma=0", post_limit("dissipative-oscillator", {"gamma": 0}) == conservative)
    expect("radiation reaction e=0", post_limit("abraham-lorentz", {"e": 0}) == conservative)
    expect("langevin constant coefficients without noise",
           post_limit("langevin", {"gamma": "gamma", "D": 0})
           == post_limit("dissipative-oscillator"))
    expect("rcd gamma=beta=0 is the heat equation",
           same(post_limit("rcd", {"gamma": 0, "beta": 0}),
                parse("f(t,x) - U[1,0](t,x) + K*U[0,2](t,x)")))
    linear = post_limit("fp-linear")
    expect("fp-nonlinear-1 mu=1", post_limit("fp-nonlinear-1", {"mu": 1}) == linear)
    expect("fp-nonlinear-2 mu=nu=1", post_limit("fp-nonlinear-2", {"mu": 1, "nu": 1}) == linear)
    expect("deformed kdv mu=nu=1", post_limit("kdv-deformed", {"mu": 1, "nu": 1}) == post_limit("kdv"))
    seconds = time.perf_counter() - start
    report(2, failures, seconds, 5, "13 reductions")


def test_criterion_3_numeric_oracles():
    start = time.perf_counter()
    failures = []
    values = {}

    def within(name, value, bound):
        values[name] = value
        if not value <= bound:
            failures.append(f"{name} {value:.3g} > {bound:g}")

    tr = simulate_dissipative_oscillator(t_span=(0, 20), dt=1e-3)
    within("damped L-inf", float(np.max(np.abs(tr["x"] - damped_closed_form(1, 0.2, 1, 0, tr.t)))), 1e-6)

    ck = simulate_caldirola_kanai(lam=0.2, t_span=(0, 20), dt=1e-3).physical
    within("caldirola-kanai L-inf", float(np.max(np.abs(ck["x"] - damped_closed_form(1, 0.2, 1, 0, ck.t)))), 1e-6)

    fg = simulate_rcd(grid=Grid.interval(-10, 10, 400), t_span=(0, 0.1))
    within("heat kernel L-inf", float(np.max(np.abs(fg.final - heat_kernel_gaussian(fg.x, fg.times[-1])))), 1e-3)

    fp = simulate_fokker_planck(lambda x: -x, D=1.0, t_span=(0, 5))
    x, P, h = fp.x, fp.final, fp.dx
    mean = float((x * P).sum() * h)
    var = float(((x - mean) ** 2 * P).sum() * h)
    within("OU stationary variance (relative)", abs(var - 1.0), 1e-2)
    within("FP normalization drift", fp.drift("norm"), 1e-6)
    for variant, kw, key in [("nl1", {"mu": 1.0}, "norm"), ("nl2", {"mu": 0.5}, "evolved_norm")]:
        within(f"FP {variant} normalization drift",
               simulate_fokker_planck(lambda x: -x, variant=variant, t_span=(0, 1), **kw).drift(key), 1e-6)

    # one box transit: L = 40 at speed c = 4
    kdv = simulate_kdv(Grid.interval(-20, 20, 256), c=4.0, t_span=(0, 10))
    exact = kdv_soliton(kdv.x, kdv.times[-1], 4.0, 0.0, 40.0)
    within("KdV shape after one transit", float(np.max(np.abs(kdv.final - exact))), 1e-3)
    within("KdV mass drift", kdv.drift("mass"), 1e-8)

    llg = simulate_llg(kc=0.1, t_span=(0, 20), dt=1e-3)
    within("LLG norm drift", float(np.max(np.abs(llg["norm_error"]))), 1e-8)
    pre = simulate_llg(kc=0.0, t_span=(0, 20), dt=1e-3)
    phase = np.unwrap(np.arctan2(pre["my"], pre["mx"]))
    omega = np.polyfit(pre.t, phase, 1)[0]
    within("LLG precession frequency (relative to gamma H)", abs(abs(omega) - 1.0), 1e-3)

    seconds = time.perf_counter() - start
    report(3, failures, seconds, 300, f"{len(values)} checks")


def test_criterion_4_stochastic():
    start = time.perf_counter()
    failures = []
    ens = simulate_langevin_sbm(N=10_000, seed=0, t_span=(0, 10), dt=1e-3, checkpoints=10)
    oracle = sbm_moments(times=ens.times)["msd"]
    if not np.allclose(oracle[1:], SBM_MSD, rtol=1e-6):
        failures.append("moment oracle disagrees with the frozen values")
    z = np.abs(ens.msd[1:] - np.array(SBM_MSD)) / ens.stderr[1:]
    bad = [f"t={t:g} z={v:.2f}" for t, v in zip(ens.times[1:], z) if v > 3]
    failures += bad
    a = run_simulation("langevin", {"N": 10_000}, seed=0)
    b = run_simulation("langevin", {"N": 10_000}, seed=0)
    if a.files != b.files or a.manifest != b.manifest:
        failures.append("replay differs")
    seconds = time.perf_counter() - start
    report(4, failures, seconds, 600, f"max z = {z.max():.2f} over 10 checkpoints")


PROPERTIES = [
    symbolic_props.test_linearity,
    symbolic_props.test_leibniz,
    symbolic_props.test_derivative_matches_central_difference,
    symbolic_props.test_simplify_idempotent,
    symbolic_props.test_simplify_preserves_value,
    symbolic_props.test_sexpr_round_trip,
    symbolic_props.test_plain_round_trip,
    kernel_props.test_linearity_and_leibniz,
]


def test_criterion_5_symbolic_properties():
    start = time.perf_counter()
    failures = []
    for prop in PROPERTIES:
        try:
            prop()  # 100 derandomized examples each
        except Exception as exc:  # noqa: BLE001
            failures.append(f"{prop.__name__}: {type(exc).__name__}")
    seconds = time.perf_counter() - start
    report(5, failures, seconds, 30, f"{len(PROPERTIES)} properties x 100 cases")


def test_criterion_6_printed_targets(capsys):
    start = time.perf_counter()
    failures = []
    for sid in ("kdv", "abraham-lorentz", "caldirola-kanai"):
        code = main(["verify", sid, "--printed-target"])
        out = capsys.readouterr().out
        if code != 1 or "diff:" not in out:
            failures.append(f"{sid}: exit {code}")
    seconds = time.perf_counter() - start
    report(6, failures, seconds, 60, "3 printed targets differ as documented")
