from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dirop import exprcore as ec
from dirop.exprcore import Abs, Add, Const, Pow, Sub, Var

V = ["x1", "x2"]


def test_parse_parabola_objective():
    e = ec.parse("x1 + x1^2 + x2^2", V)
    two = Fraction(2)
    assert e == Add(Var(0), Add(Pow(Var(0), two), Pow(Var(1), two)))


def test_parse_constant_and_abs_power():
    assert ec.parse("0", V) == Const(Fraction(0))
    assert ec.parse("x2 - abs(x1)^(3/2)", V) == Sub(Var(1), Pow(Abs(Var(0)), Fraction(3, 2)))


def test_decimal_literal_is_exact():
    assert ec.parse("0.1", []) == Const(Fraction(1, 10))


def test_parse_errors_carry_offsets():
    with pytest.raises(ec.ParseError) as err:
        ec.parse("x1 + * x2", V)
    assert err.value.offset == 5
    with pytest.raises(ec.UnknownVariable):
        ec.parse("x3 + 1", V)


@pytest.mark.parametrize("text,x,want", [
    ("(x2+1)^2", (0, 0), 1),
    ("x1+x2^2", (0, 1), 1),
    ("abs(x1)^(3/2)", (4, 0), 8),
])
def test_evaluate_exact(text, x, want):
    v = ec.evaluate(ec.parse(text, V), [Fraction(c) for c in x])
    assert v == want and isinstance(v, Fraction)


def test_division_by_zero():
    with pytest.raises(ec.EvaluationError):
        ec.evaluate(ec.parse("1/x1", V), [0, 1])


def test_parabola_gradient_and_hessian():
    f = ec.parse("x1 + x1^2 + x2^2", V)
    assert ec.gradient(f, [0, 0]) == [1, 0]
    assert ec.hessian(f, [0, 0]) == [[2, 0], [0, 2]]
    assert ec.hessian(ec.parse("x2^2", V), [0, 0]) == [[0, 0], [0, 2]]


def test_second_directional_assembles_g_curvature():
    g = [ec.parse("x^2", ["x"]), ec.parse("x", ["x"])]
    assert [ec.differentiate(gi, [0], "second_directional", [1]) for gi in g] == [2, 0]


def test_kink_raises():
    e = ec.parse("abs(x1)^(3/2)", V)
    with pytest.raises(ec.NonSmoothPoint):
        ec.gradient(e, [0, 1])
    assert ec.evaluate(e, [0, 1]) == 0


# random expressions ----------------------------------------------------------

def _leaf():
    return st.one_of(
        st.builds(Var, st.integers(0, 1)),
        st.builds(lambda p, q: Const(Fraction(p, q)), st.integers(-3, 3), st.integers(1, 3)),
    )


def _extend(children):
    return st.one_of(
        st.builds(Add, children, children),
        st.builds(Sub, children, children),
        st.builds(ec.Mul, children, children),
        st.builds(lambda a: Pow(a, Fraction(2)), children),
        st.builds(lambda a: Pow(a, Fraction(3)), children),
        # abs arguments are shifted well away from the kink
        st.builds(lambda a: Pow(Abs(Add(Pow(a, Fraction(2)), Const(Fraction(1)))), Fraction(3, 2)), children),
        st.builds(ec.Neg, children),
    )


exprs = st.recursive(_leaf(), _extend, max_leaves=12)
points = st.tuples(st.fractions(-2, 2, max_denominator=8), st.fractions(-2, 2, max_denominator=8))


def _depth(e):
    kids = ec.children(e)
    return 1 + max((_depth(k) for k in kids), default=0)


def _fd_grad(fn, x, h=1e-5):
    out = []
    for i in range(len(x)):
        e = np.zeros(len(x))
        e[i] = h
        out.append((fn(x + e) - fn(x - e)) / (2 * h))
    return np.array(out)


@settings(max_examples=200, deadline=None, derandomize=True)
@given(exprs, points)
def test_gradient_hessian_match_finite_differences(e, p):
    if _depth(e) > 6:
        return
    x = np.array([float(c) for c in p])
    fn = lambda z: float(ec.evaluate(e, [float(c) for c in z]))
    g = np.array([float(v) for v in ec.gradient(e, list(p))])
    H = np.array([[float(v) for v in r] for r in ec.hessian(e, list(p))])
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(H))) or np.abs(H).max(initial=0) > 1e6:
        return
    fd = _fd_grad(fn, x)
    assert np.linalg.norm(g - fd) <= 1e-6 * max(1.0, np.linalg.norm(g))
    gfn = lambda z: np.array([float(v) for v in ec.gradient(e, [float(c) for c in z])])
    fdH = np.array([_fd_grad(lambda z, i=i: gfn(z)[i], x) for i in range(2)])
    assert np.linalg.norm(H - fdH) <= 1e-4 * max(1.0, np.linalg.norm(H))
    assert np.array_equal(H, H.T)


@settings(max_examples=100, deadline=None, derandomize=True)
@given(exprs, points, points)
def test_second_directional_is_quadratic_form(e, p, u):
    H = ec.hessian(e, list(p))
    assert ec.second_directional(e, list(p), list(u)) == ec.quad_form(H, list(u))


@settings(max_examples=200, deadline=None, derandomize=True)
@given(exprs)
def test_unparse_roundtrip(e):
    # the identity is stated for parser-produced trees, so start from one
    tree = ec.parse(ec.unparse(e, V), V)
    assert ec.parse(ec.unparse(tree, V), V) == tree
