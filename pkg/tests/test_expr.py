import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mppp import expr as ex
from mppp.expr import BinOp, Call, Neg, Num, Var, evaluate, parse, render


def ev(text, **kw):
    return evaluate(parse(text), **kw)


def test_examples():
    assert ev("x - x^3", x=2) == -6
    assert ev("-x^2", x=3) == -9
    assert ev("1*x", x=1) == 1.0
    assert ev("0", x=5, y=-1, t=9) == 0.0
    assert ev("exp(t)", t=1) == 2.718281828459045


def test_open_call_reports_offset():
    with pytest.raises(ex.ExprSyntaxError) as info:
        parse("sin(")
    assert info.value.offset == 4
    assert info.value.expected == "expression"


# (expression, bindings, hand-parenthesized equivalent)
PRECEDENCE = [
    ("1 + 2 * 3", {}, "1 + (2 * 3)"),
    ("1 - 2 - 3", {}, "(1 - 2) - 3"),
    ("8 / 4 / 2", {}, "(8 / 4) / 2"),
    ("2 ^ 3 ^ 2", {}, "2 ^ (3 ^ 2)"),
    ("-x^2", {"x": 3}, "-(x^2)"),
    ("-x*y", {"x": 3, "y": 2}, "(-x) * y"),
    ("2^-1", {}, "2^(-1)"),
    ("x - x^3", {"x": 1.5}, "x - (x^3)"),
    ("x*y^2", {"x": 2, "y": 3}, "x * (y^2)"),
    ("--x", {"x": 4}, "-(-x)"),
    ("x / y * t", {"x": 6, "y": 3, "t": 5}, "(x / y) * t"),
    ("x - y + t", {"x": 1, "y": 2, "t": 3}, "(x - y) + t"),
    ("2 * -x", {"x": 1.25}, "2 * (-x)"),
    ("-2^2", {}, "-(2^2)"),
    ("sin(x)^2 + cos(x)^2", {"x": 0.7}, "(sin(x)^2) + (cos(x)^2)"),
    ("exp(-t) * x", {"x": 2, "t": 0.5}, "(exp(-t)) * x"),
    ("1e-3 * x", {"x": 4}, "0.001 * x"),
    ("2.5E+2 - .5", {}, "250 - 0.5"),
    ("x^y^t", {"x": 1.1, "y": 2, "t": 1.5}, "x^(y^t)"),
    ("-x^-y", {"x": 2, "y": 2}, "-(x^(-y))"),
    ("log(exp(x)) - x", {"x": 0.3}, "(log(exp(x))) - x"),
    ("sqrt(abs(-x)) * tanh(y)", {"x": 4, "y": 0.2}, "(sqrt(abs(-x))) * (tanh(y))"),
    ("(1 + x) * (1 - x)", {"x": 0.5}, "1 - x^2"),
    ("x*(1-x)/2", {"x": 0.25}, "(x * (1 - x)) / 2"),
]


@pytest.mark.parametrize("text, env, expected", PRECEDENCE)
def test_precedence_corpus(text, env, expected):
    got = ev(text, **env)
    want = ev(expected, **env)
    assert got == pytest.approx(want, rel=1e-12, abs=1e-300)


MALFORMED = [
    ("sin(", 4),
    ("x +", 3),
    ("2x", 1),
    ("(x", 2),
    ("x)", 1),
    ("*x", 0),
    ("x ** 2", 3),
    ("sin x", 4),
    ("1.5.2", 3),
    ("x $ y", 2),
    ("", 0),
    ("   ", 0),
    ("exp()", 4),
    ("x(2)", 1),
    ("+x", 0),
]


@pytest.mark.parametrize("text, offset", MALFORMED)
def test_malformed(text, offset):
    with pytest.raises(ex.ExprSyntaxError) as info:
        parse(text)
    assert info.value.offset == offset


def test_offset_is_in_bytes():
    # "é" is two bytes in UTF-8
    with pytest.raises(ex.ExprSyntaxError) as info:
        parse("x + é")
    assert info.value.offset == 4
    with pytest.raises(ex.ExprSyntaxError) as info:
        parse("(x + 1) + ")
    assert info.value.offset == 10


@pytest.mark.parametrize("text", ["z", "pi", "sinh(x)", "X", "x10", "e"])
def test_unknown_identifier(text):
    with pytest.raises(ex.UnknownIdentifierError):
        parse(text)


def test_tree_shapes():
    assert parse("-x^2") == Neg(BinOp("^", Var("x"), Num(2)))
    assert parse("1-2-3") == BinOp("-", BinOp("-", Num(1), Num(2)), Num(3))
    assert parse("2^3^2") == BinOp("^", Num(2), BinOp("^", Num(3), Num(2)))
    assert parse("sqrt(t)") == Call("sqrt", Var("t"))


def test_indexed_variables():
    e = parse("x0 * x2 - t")
    assert evaluate(e, t=1, x0=2, x2=3) == 5


def test_domain_errors():
    with pytest.raises(ex.DomainError):
        ev("log(x)", x=0)
    with pytest.raises(ex.DomainError):
        ev("log(x)", x=-1)
    with pytest.raises(ex.DomainError):
        ev("sqrt(x)", x=-1e-300)
    assert ev("sqrt(x)", x=0) == 0.0


def test_strict_mode():
    assert ev("exp(x)", x=1000) == math.inf
    with pytest.raises(ex.NonFiniteResultError):
        ev("exp(x)", x=1000, strict=True)
    with pytest.raises(ex.NonFiniteResultError):
        ev("1/x", x=0, strict=True)


def test_array_evaluation_matches_scalar():
    e = parse("x - x^3 + sin(y) * t")
    xs = np.linspace(-2, 2, 7)
    ys = np.linspace(0, 1, 7)
    arr = ex.evaluate_array(e, {"x": xs, "y": ys, "t": np.float64(0.3)})
    for x, y, a in zip(xs, ys, arr):
        assert a == evaluate(e, x=x, y=y, t=0.3)


def test_array_domain_policy():
    e = parse("log(x)")
    xs = np.array([1.0, -1.0, 2.0])
    with pytest.raises(ex.DomainError):
        ex.evaluate_array(e, {"x": xs})
    out = ex.evaluate_array(e, {"x": xs}, on_domain="nan")
    assert np.isnan(out[1]) and out[0] == 0.0


def test_constant_broadcasts():
    out = ex.evaluate_array(parse("1"), {"x": np.zeros(4), "t": np.float64(0)})
    assert out.shape == (4,) and (out == 1).all()


# Random trees ---------------------------------------------------------------

leaves = st.one_of(
    st.floats(min_value=0, max_value=1e6, allow_nan=False, allow_infinity=False).map(Num),
    st.sampled_from(["x", "y", "t", "x3"]).map(Var),
)


def _extend(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda a: BinOp(*a)),
        st.tuples(st.sampled_from(ex.FUNCTIONS), children).map(lambda a: Call(*a)),
    )


trees = st.recursive(leaves, _extend, max_leaves=20)


@settings(max_examples=1000, deadline=None)
@given(trees)
def test_render_parse_roundtrip(tree):
    text = render(tree)
    again = parse(text)
    assert again == tree
    assert render(again) == text


@settings(max_examples=200, deadline=None)
@given(trees, st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 3))
def test_evaluation_is_pure(tree, x, y, t):
    before = render(tree)
    try:
        a = evaluate(tree, x=x, y=y, t=t, x3=0.5)
        b = evaluate(tree, x=x, y=y, t=t, x3=0.5)
    except ex.DomainError:
        return
    assert render(tree) == before
    assert (a == b) or (math.isnan(a) and math.isnan(b))
