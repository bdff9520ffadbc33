import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catecon.expr import BinOp, Call, EvalError, ExprSyntaxError, Neg, Num, Var, parse_expr, to_text


@pytest.mark.parametrize(
    "text, env, expected",
    [
        ("3-2*x^2-y^2-3*z^2", {"x": 0, "y": 0, "z": 0}, 3.0),
        ("x", {"x": 5}, 5.0),
        ("3-3*x^2-4*z^2-2*x*z", {"x": 1, "z": 0}, 0.0),
        ("max(x, y, 2)", {"x": 1, "y": -4}, 2.0),
        ("min(x, y)", {"x": 1, "y": -4}, -4.0),
        ("sqrt(abs(-9))", {}, 3.0),
        ("exp(log(2.5))", {}, 2.5),
        ("(2^3)^2", {}, 64.0),
    ],
)
def test_examples(text, env, expected):
    assert parse_expr(text).evaluate(env) == pytest.approx(expected)


def test_unary_minus_binds_to_atom():
    # '-' atom is an atom, so the power applies to the negated base
    assert parse_expr("-x^2").evaluate({"x": 3}) == 9
    assert parse_expr("0-x^2").evaluate({"x": 3}) == -9


def test_scientific_literals():
    assert parse_expr("1.5e-3*x").evaluate({"x": 2}) == pytest.approx(3e-3)


def test_vectorised():
    out = parse_expr("x*y+1").evaluate({"x": np.arange(3.0), "y": 2.0})
    assert out.tolist() == [1.0, 3.0, 5.0]


@pytest.mark.parametrize("text", ["1/(x-1)", "log(x-1)", "sqrt(x-2)", "log(0*x)"])
def test_domain_errors(text):
    with pytest.raises(EvalError):
        parse_expr(text).evaluate({"x": 1.0})


def test_unbound_variable():
    with pytest.raises(EvalError):
        parse_expr("x+q").evaluate({"x": 1})


@pytest.mark.parametrize("text, offset", [("3+*2", 2), ("(x+1", 4), ("x $ y", 2), ("2^3^2", 3)])
def test_syntax_error_offsets(text, offset):
    with pytest.raises(ExprSyntaxError) as err:
        parse_expr(text)
    assert err.value.offset == offset


def test_unknown_function():
    with pytest.raises(ExprSyntaxError):
        parse_expr("tan(x)")


def test_variables():
    assert parse_expr("sin(t)*r+max(a,1)").variables() == {"t", "r", "a"}


# -- round trip ----------------------------------------------------------------------

names = st.sampled_from(["x", "y", "z", "t1"])
leaves = st.one_of(
    st.floats(-50, 50, allow_nan=False).map(lambda v: Num(round(v, 3))),
    names.map(Var),
)


def _extend(children):
    return st.one_of(
        st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda t: BinOp(*t)),
        children.map(Neg),
        st.tuples(st.sampled_from(["sin", "cos", "abs", "exp"]), children).map(lambda t: Call(t[0], (t[1],))),
        st.tuples(st.sampled_from(["min", "max"]), st.lists(children, min_size=1, max_size=3)).map(
            lambda t: Call(t[0], tuple(t[1]))
        ),
    )


exprs = st.recursive(leaves, _extend, max_leaves=8)


@settings(max_examples=100, deadline=None)
@given(exprs)
def test_print_parse_round_trip(e):
    once = parse_expr(to_text(e))
    assert parse_expr(to_text(once)) == once


@settings(max_examples=100, deadline=None)
@given(exprs, st.floats(-2, 2), st.floats(-2, 2))
def test_printing_preserves_value(e, x, y):
    env = {"x": x, "y": y, "z": 0.5, "t1": -1.25}
    try:
        with np.errstate(all="ignore"):
            want = float(e.evaluate(env))
            got = float(parse_expr(to_text(e)).evaluate(env))
    except EvalError:
        return
    assert math.isclose(got, want, rel_tol=1e-12, abs_tol=1e-12) or (math.isnan(got) and math.isnan(want))
