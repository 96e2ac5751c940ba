import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geodesk import exprlang
from geodesk.exprlang import (
    BinOp,
    Call,
    ExprDomainError,
    ExprSyntaxError,
    Neg,
    Num,
    Pow,
    UnboundNameError,
    UnknownFunctionError,
    Var,
)
from geodesk.jets import extract_partial, multi_indices

from oracles import FD_TOLS, float_eval, partial_fd, random_expr

COORDS = ("x", "y", "z")


def test_parse_call_structure():
    assert exprlang.parse("exp(2*z)") == Call("exp", BinOp("*", Num(2.0), Var("z")))


def test_precedence_and_associativity():
    assert exprlang.parse("1-2-3") == BinOp("-", BinOp("-", Num(1.0), Num(2.0)), Num(3.0))
    assert exprlang.parse("a+b*c^2") == BinOp("+", Var("a"), BinOp("*", Var("b"), Pow(Var("c"), 2.0)))
    assert exprlang.parse("-x^2") == Neg(Pow(Var("x"), 2.0))
    assert exprlang.parse("x - -y") == BinOp("-", Var("x"), Neg(Var("y")))
    assert exprlang.parse(" x\t*  y ") == exprlang.parse("x*y")


def test_metric_component_value():
    e = exprlang.parse("(x^2+y^2+exp(-2*z))/(4*z)")
    assert exprlang.value(e, (0.0, 0.0, 1.0), COORDS) == pytest.approx(math.exp(-2) / 4)
    assert exprlang.value(e, (1.0, 0.0, 1.0), COORDS) == pytest.approx((1 + math.exp(-2)) / 4)


def test_syntax_error_offset():
    with pytest.raises(ExprSyntaxError) as info:
        exprlang.parse("1+*2")
    assert info.value.offset == 2
    assert "offset 2" in str(info.value)


def test_implicit_multiplication_rejected():
    with pytest.raises(ExprSyntaxError) as info:
        exprlang.parse("2z")
    assert info.value.offset == 1


def test_unknown_function_located():
    with pytest.raises(UnknownFunctionError) as info:
        exprlang.parse("1 + foo(x)")
    assert info.value.offset == 4
    assert "foo" in str(info.value)


@pytest.mark.parametrize("text", ["x^y", "x^2^3", "(x+1", "x)", "", "3 +", "exp x"])
def test_other_malformed_inputs(text):
    with pytest.raises(ExprSyntaxError):
        exprlang.parse(text)


def test_decimal_and_negative_exponents():
    assert exprlang.parse("z^0.5") == Pow(Var("z"), 0.5)
    assert exprlang.parse("z^-1") == Pow(Var("z"), -1.0)


def test_bind_rejects_undeclared():
    with pytest.raises(UnboundNameError):
        exprlang.bind(exprlang.parse("w + x"), COORDS)


def test_evaluate_examples():
    j = exprlang.evaluate(exprlang.parse("sqrt(z)"), (0.0, 0.0, 4.0), COORDS, 2)
    assert j.value == pytest.approx(2.0)
    assert extract_partial(j, (0, 0, 1)) == pytest.approx(0.25)
    j = exprlang.evaluate(exprlang.parse("y*exp(z)"), (0.0, 1.0, 0.0), COORDS, 2)
    assert j.value == pytest.approx(1.0)
    assert extract_partial(j, (0, 1, 0)) == pytest.approx(1.0)
    assert extract_partial(j, (0, 0, 1)) == pytest.approx(1.0)
    assert extract_partial(j, (0, 1, 1)) == pytest.approx(1.0)
    j = exprlang.evaluate(exprlang.parse("x^2+y^2"), (3.0, 4.0), ("x", "y"), 1)
    assert j.value == pytest.approx(25.0)
    assert extract_partial(j, (1, 0)) == pytest.approx(6.0)
    assert extract_partial(j, (0, 1)) == pytest.approx(8.0)


def test_domain_error_names_subexpression():
    with pytest.raises(ExprDomainError) as info:
        exprlang.evaluate(exprlang.parse("1 + log(z - 1)"), (0.0, 0.0, 0.5), COORDS, 1)
    assert "log(z - 1)" in str(info.value)


def test_predicate_parse_and_margin():
    p = exprlang.parse_predicate("z > 0 and z < 3.141592653589793")
    assert exprlang.predicate_margin(p, (0.0, 0.0, 0.2), COORDS) == pytest.approx(0.2)
    assert exprlang.predicate_margin(p, (0.0, 0.0, -0.1), COORDS) < 0
    assert exprlang.parse_predicate(exprlang.predicate_to_string(p)) == p


# randomized properties ------------------------------------------------------

def _check_against_fd(text, rng):
    node = exprlang.parse(text)
    pt = rng.uniform(-0.8, 0.8, size=3)
    jet = exprlang.evaluate(node, pt, COORDS, 3)
    f = lambda v: float_eval(node, dict(zip(COORDS, v)))  # noqa: E731
    assert jet.value == pytest.approx(f(pt), rel=1e-13, abs=1e-13)
    for mi in multi_indices(3, 3)[1:]:
        deg = sum(mi)
        ref = partial_fd(f, pt, mi)
        got = extract_partial(jet, mi)
        assert abs(got - ref) <= FD_TOLS[deg] * (1 + abs(ref)), (text, mi, got, ref)


def test_jets_agree_with_fd_on_200_random_expressions():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        _check_against_fd(random_expr(rng, list(COORDS)), rng)


def test_evaluate_agrees_with_fd_on_100_random_expressions():
    rng = np.random.default_rng(7)
    for _ in range(100):
        _check_against_fd(random_expr(rng, list(COORDS), depth=4), rng)


numbers = st.one_of(
    st.integers(0, 1000).map(float),
    st.floats(0.0, 1e6, allow_nan=False, allow_infinity=False),
)
exponents = st.one_of(st.integers(-4, 4).map(float), st.floats(-3.0, 3.0, allow_nan=False))


def _extend(children):
    return st.one_of(
        st.builds(Neg, children),
        st.builds(BinOp, st.sampled_from("+-*/"), children, children),
        st.builds(Pow, children, exponents),
        st.builds(Call, st.sampled_from(sorted(exprlang.FUNCTIONS)), children),
    )


exprs = st.recursive(
    st.one_of(st.builds(Num, numbers), st.builds(Var, st.sampled_from(COORDS))),
    _extend,
    max_leaves=12,
)


@settings(max_examples=100, deadline=None)
@given(exprs)
def test_print_parse_roundtrip(node):
    text = exprlang.to_string(node)
    assert exprlang.parse(text) == node
    assert exprlang.to_string(exprlang.parse(text)) == text


@settings(max_examples=100, deadline=None)
@given(exprs)
def test_parse_print_parse_is_stable(node):
    once = exprlang.parse(exprlang.to_string(node))
    assert exprlang.parse(exprlang.to_string(once)) == once
