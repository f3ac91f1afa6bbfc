import math
import random

import pytest
from hypothesis import given

from conftest import exprs
from deformvar.kernels import (
    BadKernel,
    ConformableInterval,
    Hausdorff,
    Identity,
    LambdaExp,
    eval_deformed_numeric,
    expand_deformed,
    kernel_factor,
)
from deformvar.symbolic import (
    Add,
    Const,
    Deformed,
    EvalSingularity,
    Mul,
    differentiate,
    evaluate,
    parse,
    parse_kernel,
    simplify,
    substitute,
)

HALF = parse("1/2")


def test_conformable_factor():
    assert kernel_factor(ConformableInterval(HALF, parse("a")), "t") == parse("(t - a)^(1/2)", offsets=[("t", "a")])


def test_identity_factor():
    assert kernel_factor(Identity(), "t") == Const(1)


def test_halved_lambda_exp_factor():
    assert kernel_factor(LambdaExp(parse("lambda"), halved=True), "t") == parse("exp(-lambda*t/2)")
    assert kernel_factor(LambdaExp(parse("lambda")), "t") == parse("exp(-lambda*t)")


def test_hausdorff_factor():
    assert kernel_factor(Hausdorff(parse("alpha"), parse("l0")), "x") == parse("l0*(1 + x/l0)^(1 - alpha)")


def test_kernel_syntax():
    assert parse_kernel("conf(1/2,a)") == ConformableInterval(HALF, parse("a"))
    assert parse_kernel("lexp2(lambda)") == LambdaExp(parse("lambda"), True)
    assert parse_kernel("id") == Identity()


def test_conformable_order_range():
    with pytest.raises(BadKernel):
        ConformableInterval(parse("3/2"), parse("a"))
    with pytest.raises(BadKernel):
        ConformableInterval(Const(0))
    ConformableInterval(Const(1))  # classical degeneration admitted


def test_expand_examples():
    assert expand_deformed(parse("D[conf(1/2,0),t](t^2)")) == parse("2*t^(3/2)")
    assert expand_deformed(Deformed(ConformableInterval(HALF, parse("a")), "t", parse("c"))) == Const(0)
    assert expand_deformed(parse("D[lexp(lambda),t](q(t))")) == parse("exp(-lambda*t)*d(q,t)")


def test_numeric_limit_quotient():
    k = ConformableInterval(HALF, Const(0))
    assert abs(eval_deformed_numeric(lambda t: t * t, k, 4.0, 1e-6) - 16.0) < 1e-4
    assert eval_deformed_numeric(lambda t: 3.0, k, 2.0) == 0.0
    assert abs(eval_deformed_numeric(lambda t: t ** 3, Identity(), 2.0) - 12.0) < 1e-4


def test_numeric_singular_at_origin():
    with pytest.raises(EvalSingularity):
        eval_deformed_numeric(lambda t: t * t, ConformableInterval(HALF, parse("a")), 1.0, bindings={"a": 1.0})


@pytest.mark.parametrize("kernel", ["conf(1,a)", "lexp(0)", "lexp2(0)", "haus(1,1)", "id"])
def test_degeneration_to_ordinary_derivative(kernel):
    e = parse(f"D[{kernel},t](x(t)^2 + t*x(t))")
    assert expand_deformed(e) == differentiate(parse("x(t)^2 + t*x(t)"), "t")


def test_hausdorff_degenerates_up_to_its_scale():
    f = parse("x(t)^2 + t*x(t)")
    e = expand_deformed(parse("D[haus(1,l0),t](x(t)^2 + t*x(t))"))
    assert e == simplify(Mul(parse("l0"), differentiate(f, "t")))


def test_lambda_zero_by_substitution():
    e = expand_deformed(parse("D[lexp(lambda),t](q(t))"))
    assert substitute(e, "lambda", 0) == parse("d(q,t)")


@given(exprs, exprs)
def test_linearity_and_leibniz(f, g):
    k = "conf(1/2,a)"

    def D(e):
        return expand_deformed(Deformed(parse_kernel(k), "t", e))

    lin = simplify(Add(D(Add(Mul(Const(2), f), g)), Mul(Const(-2), D(f)), Mul(Const(-1), D(g))))
    assert lin == Const(0)
    leib = simplify(Add(D(Mul(f, g)), Mul(Const(-1), f, D(g)), Mul(Const(-1), g, D(f))))
    assert leib == Const(0)


KERNELS = {
    "conf": (ConformableInterval(HALF, parse("a")), {"a": 0.25}),
    "conf-alpha": (ConformableInterval(parse("3/4"), Const(0)), {}),
    "lexp": (LambdaExp(parse("lambda")), {"lambda": 0.7}),
    "lexp2": (LambdaExp(parse("lambda"), True), {"lambda": 0.7}),
    "haus": (Hausdorff(parse("3/5"), parse("l0")), {"l0": 2.0}),
    "id": (Identity(), {}),
}


@pytest.mark.parametrize("name", sorted(KERNELS))
def test_numeric_symbolic_agreement(name):
    k, b = KERNELS[name]
    f_expr = parse("t^3 - 2*t + exp(t/2)")
    sym = expand_deformed(Deformed(k, "t", f_expr))
    rng = random.Random(11)
    for _ in range(50):
        t = rng.uniform(0.4, 3.0)
        exact = evaluate(sym, {**b, "t": t})
        num = eval_deformed_numeric(lambda s: s ** 3 - 2 * s + math.exp(s / 2), k, t, 1e-7, bindings=b)
        assert abs(num - exact) <= 1e-4 * max(1.0, abs(exact))
