import threading
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmcverify.formats import parse_expression
from pmcverify.poly import (MissingParameterError, Polynomial, add, common_factor, derivative,
                            intern_factor, mul, scale)


def P(text):
    return parse_expression(text)


def test_eval_product_of_complements():
    assert P("p*(1-p)").eval({"p": F(3, 10)}) == F(21, 100)


def test_eval_zero_polynomial():
    assert Polynomial().eval({}) == 0
    assert Polynomial().eval({"p": F(1, 3)}) == 0


def test_eval_residual_of_five_branches():
    f = P("1 - p1 - p2 - p3 - p4")
    assert f.eval({f"p{i}": F(9, 10) for i in range(1, 5)}) == F(-13, 5)


def test_eval_missing_parameter_named():
    with pytest.raises(MissingParameterError, match="q"):
        P("p*q").eval({"p": F(1, 2)})


def test_decimal_literals_are_exact():
    assert P("0.6").constant_value() == F(3, 5)
    assert P("3/5").constant_value() == F(3, 5)
    assert P("1e-6").constant_value() == F(1, 10 ** 6)


def test_add_complements_to_one():
    s = add(P("p"), P("1-p"))
    assert s.is_constant() and s.constant_value() == 1
    assert len(s.terms) == 1


def test_mul_keeps_two_factors():
    f = mul(P("p"), P("1-p"))
    assert len(f.terms) == 1
    (mono, c), = f.terms.items()
    assert c == 1 and len(mono) == 2
    for x in [F(0), F(1, 7), F(2, 5), F(9, 10), F(3)]:
        assert f.eval({"p": x}) == x * (1 - x)


def test_scale_by_zero():
    assert scale(P("p*(1-p)"), 0).is_zero()
    assert not scale(P("p*(1-p)"), 0).terms


def test_sum_of_plain_monomials_is_one_factor():
    f = P("1 - p")
    (mono, c), = f.terms.items()
    assert c == 1 and len(mono) == 1 and not mono[0][0].is_atomic


def test_normalization_pulls_scalars_out():
    assert P("p - 1").same_terms(P("1 - p").scale(-1))
    assert P("2 - 2*p").same_terms(P("1 - p").scale(2))


def test_derivative_product():
    assert derivative(P("p*(1-p)"), "p") == P("1 - 2*p")


def test_derivative_constant_in_other_parameter():
    assert derivative(P("q"), "p").is_zero()


def test_derivative_power_finite_difference():
    f = P("(1-p)^3")
    d = derivative(f, "p")
    assert d == P("-3*(1-p)^2")
    h = 1e-6
    x = 0.25
    fd = (f.eval_float({"p": x + h}) - f.eval_float({"p": x - h})) / (2 * h)
    assert abs(fd - d.eval_float({"p": x})) / abs(fd) < 1e-4


def test_common_factor_shared_parameter():
    f, parts = common_factor([P("2/5*p"), P("3/5*p")])
    assert f == P("p")
    assert [c for _, c in parts] == [F(2, 5), F(3, 5)]
    assert all(g.is_zero() for g, _ in parts)


def test_common_factor_absent():
    assert common_factor([P("p"), P("q")]) is None


def test_common_factor_single_carrier_is_absent():
    assert common_factor([P("2/5*q*(1-q)"), P("1-q")]) is None


def test_common_factor_picks_complement_with_two_carriers():
    f, parts = common_factor([P("2/5*q*(1-q) + 3/5*(1-q)"), P("2/5*(1-q) + 3/5*q")])
    assert f == P("1-q")
    assert [c for _, c in parts] == [F(3, 5), F(2, 5)]


def test_common_factor_prefers_deeper_monomial():
    f, _ = common_factor([P("p*(1-q) + (1-q)"), P("2*p*(1-q) + 3*(1-q)")])
    assert f == P("p*(1-q)")


def test_common_factor_positive_only_skips_negative_carriers():
    assert common_factor([P("p"), P("-p + 1")], positive_only=True) is None


def test_common_factor_needs_two_inputs():
    with pytest.raises(ValueError):
        common_factor([P("p")])


def test_interning_is_thread_safe():
    dense = {(("z", 1),): F(1), (("z", 2),): F(1)}
    out = []
    ts = [threading.Thread(target=lambda: out.append(intern_factor(dict(dense)))) for _ in range(16)]
    for t in ts:
        t.start()
    for t in ts:
        t.join()
    assert len({id(f) for f in out}) == 1


# -- property tests -----------------------------------------------------------

names = st.sampled_from(["p", "q", "r"])
small = st.fractions(min_value=-3, max_value=3, max_denominator=7)


@st.composite
def polys(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        if draw(st.booleans()):
            return Polynomial.const(draw(small))
        return Polynomial.param(draw(names))
    a = draw(polys(depth=depth - 1))
    b = draw(polys(depth=depth - 1))
    op = draw(st.sampled_from(["+", "-", "*", "1-"]))
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    return parse_expression(f"1 - ({a})")


points = st.fixed_dictionaries({n: small for n in ["p", "q", "r"]})


@settings(max_examples=150, deadline=None)
@given(polys(), polys(), points)
def test_ring_laws_by_evaluation(f, g, u):
    assert (f + g).eval(u) == f.eval(u) + g.eval(u)
    assert (f * g).eval(u) == f.eval(u) * g.eval(u)
    assert (f - g).eval(u) == f.eval(u) - g.eval(u)


@settings(max_examples=100, deadline=None)
@given(polys(), st.lists(st.fractions(min_value=F(1, 10), max_value=F(9, 10), max_denominator=50),
                         min_size=3, max_size=3))
def test_derivative_matches_finite_difference(f, xs):
    u = {"p": float(xs[0]), "q": float(xs[1]), "r": float(xs[2])}
    d = derivative(f, "p").eval_float(u)
    h = 1e-6
    up = dict(u, p=u["p"] + h)
    dn = dict(u, p=u["p"] - h)
    fd = (f.eval_float(up) - f.eval_float(dn)) / (2 * h)
    assert abs(fd - d) <= 1e-4 * max(1.0, abs(d))


@settings(max_examples=100, deadline=None)
@given(st.lists(polys(), min_size=2, max_size=4))
def test_common_factor_reassembles(fs):
    res = common_factor(fs)
    if res is None:
        return
    f, parts = res
    for orig, (g, c) in zip(fs, parts):
        assert g + f.scale(c) == orig


@settings(max_examples=100, deadline=None)
@given(polys(), points)
def test_print_parse_round_trip(f, u):
    g = parse_expression(str(f))
    assert g == f
    assert parse_expression(str(g)).same_terms(g)
