import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from whitney.expr import ExprSyntaxError, compile_expr, compile_many, derivative, parse

leaf = st.one_of(st.sampled_from(["x", "y", "pi"]), st.integers(0, 9).map(str),
                 st.floats(0.1, 5, allow_nan=False).map(lambda v: f"{v:.3f}"))


def _grow(children):
    return st.one_of(
        st.tuples(children, st.sampled_from(["+", "-", "*"]), children).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
        st.tuples(children, children).map(lambda t: f"({t[0]} / (2 + sin({t[1]})))"),
        st.tuples(children, st.integers(0, 3)).map(lambda t: f"({t[0]})^{t[1]}"),
        children.map(lambda a: f"-{a}"),
        st.tuples(st.sampled_from(["sin", "cos"]), children).map(lambda t: f"{t[0]}({t[1]})"),
        children.map(lambda a: f"exp(sin({a}))"),
        children.map(lambda a: f"sqrt(1 + ({a})^2)"),
        st.tuples(children, children).map(lambda t: f"atan2({t[0]}, {t[1]})"),
    )


expressions = st.recursive(leaf, _grow, max_leaves=12)


def oracle(text, x, y):
    src = text.replace("^", "**")
    env = {"x": x, "y": y, "pi": math.pi, "sin": math.sin, "cos": math.cos, "exp": math.exp,
           "sqrt": math.sqrt, "atan2": math.atan2, "__builtins__": {}}
    return eval(src, env)  # noqa: S307


@settings(max_examples=200, deadline=None)
@given(expressions, st.floats(-2, 2), st.floats(-2, 2))
def test_compiled_expression_matches_python_evaluation(text, x, y):
    try:
        want = oracle(text, x, y)
    except (OverflowError, ZeroDivisionError, ValueError):
        assume(False)
    assume(math.isfinite(want) and abs(want) < 1e12)
    f = compile_expr(parse(text))
    got = f(np.array([x]), np.array([y]))
    assert got.shape == (1,)
    assert got[0] == pytest.approx(want, rel=1e-10, abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(expressions, expressions, st.floats(-2, 2), st.floats(-2, 2))
def test_shared_subterm_compilation_agrees(a, b, x, y):
    na, nb = parse(a), parse(b)
    with np.errstate(all="ignore"):
        fa, fb = compile_many([na, nb])(np.array([x, y]), np.array([y, x]))
        ea, eb = compile_expr(na)(np.array([x, y]), np.array([y, x])), compile_expr(nb)(np.array([x, y]), np.array([y, x]))
    np.testing.assert_array_equal(fa, ea)
    np.testing.assert_array_equal(fb, eb)


@settings(max_examples=100, deadline=None)
@given(expressions, st.floats(-1.5, 1.5))
def test_derivative_matches_central_difference(text, x0):
    node = parse(text, ("x", "y"))
    f = compile_expr(node)
    df = compile_expr(derivative(node, "x"))
    h = 1e-5
    xs = np.array([x0 - h, x0 + h, x0 - h / 8, x0 + h / 8])
    with np.errstate(all="ignore"):
        vals = f(xs, np.full(4, 0.3))
        d = df(np.array([x0]), np.full(1, 0.3))[0]
    assume(np.all(np.isfinite(vals)) and np.isfinite(d) and abs(d) < 1e4)
    fd = (vals[1] - vals[0]) / (2 * h)
    fine = (vals[3] - vals[2]) / (h / 4)
    assume(abs(fd - fine) < 1e-3 * (1 + abs(fd)))  # skip points where f is not smooth
    assert d == pytest.approx(fd, rel=1e-4, abs=1e-4)


def test_precedence_and_associativity():
    cases = {"-2^2": -4, "2^3^2": 512, "2^-1": 0.5, "1 - 2 - 3": -4, "8 / 4 / 2": 1, "2 * 3 + 4": 10,
             "+3": 3, "atan2(1, 1) * 4": math.pi}
    for text, want in cases.items():
        assert compile_expr(parse(text))(np.zeros(1), np.zeros(1))[0] == pytest.approx(want)


def test_constant_expression_broadcasts():
    out = compile_expr(parse("pi / 2"))(np.zeros(5), np.zeros(5))
    assert out.shape == (5,)
    a, b = compile_many([parse("1"), parse("x")])(np.arange(3.0), np.zeros(3))
    assert a.shape == (3,) and np.all(a == 1)
    np.testing.assert_array_equal(b, np.arange(3.0))


@pytest.mark.parametrize("text,pos", [("x +", 3), ("sin(x", 5), ("2 * * x", 4), ("foo(x)", 0), ("z + 1", 0),
                                       ("atan2(x)", 0), ("x $ y", 2)])
def test_syntax_errors_carry_position(text, pos):
    with pytest.raises(ExprSyntaxError) as e:
        parse(text)
    assert e.value.position == pos


def test_curve_variable_set():
    node = parse("cos(2*pi*t)", ("t",))
    assert compile_expr(node, ("t",))(np.array([0.5]))[0] == pytest.approx(-1)
    with pytest.raises(ExprSyntaxError):
        parse("x + t", ("t",))
