import itertools
import random
from fractions import Fraction as F

from hypothesis import given, settings
from hypothesis import strategies as st

from pmcverify.bounds import Interval, bound_box, clamp_unit, ia_eval
from pmcverify.formats import parse_expression

TOL = F(1, 10 ** 6)


def P(text):
    return parse_expression(text)


def box(**kw):
    return {k: Interval(F(a), F(b)) for k, (a, b) in kw.items()}


def test_ia_identity():
    assert ia_eval(P("p"), box(p=("3/10", "6/10"))) == Interval(F(3, 10), F(3, 5))


def test_ia_factorized_product():
    # [0.3,0.6] * [0.4,0.7]
    assert ia_eval(P("p*(1-p)"), box(p=("3/10", "6/10"))) == Interval(F(3, 25), F(21, 50))


def test_ia_linear():
    assert ia_eval(P("1 - p - q"), box(p=(0, 1), q=(0, 1))) == Interval(F(-1), F(1))


def test_bound_box_exact_critical_point():
    assert bound_box(P("p*(1-p)"), box(p=("3/10", "6/10")), TOL) == Interval(F(21, 100), F(1, 4))


def test_bound_box_multiaffine_vertices():
    b = box(p1=("1/10", "9/10"), p2=("1/10", "9/10"))
    assert bound_box(P("1 - p1 - p2"), b, TOL) == Interval(F(-4, 5), F(4, 5))


def test_bound_box_constant():
    assert bound_box(P("2/5"), box(p=(0, 1)), TOL) == Interval.point(F(2, 5))


def test_bound_box_irrational_critical_point():
    # min of p^3 - 2p on [0,2] is -(4/3)*sqrt(2/3)
    iv = bound_box(P("p^3 - 2*p"), box(p=(0, 2)), TOL)
    true_min = -(4 / 3) * (2 / 3) ** 0.5
    assert iv.hi == 4
    assert float(iv.lo) <= true_min <= float(iv.lo) + 1e-6


def test_bound_box_substitutes_point_coordinates():
    b = box(p=("1/2", "1/2"), q=(0, 1))
    assert bound_box(P("p*q*(1-q)"), b, TOL) == Interval(F(0), F(1, 8))


def test_clamp():
    assert clamp_unit(Interval(F(-4, 5), F(4, 5))) == Interval(F(0), F(4, 5))
    assert clamp_unit(Interval(F(21, 100), F(1, 4))) == Interval(F(21, 100), F(1, 4))
    assert clamp_unit(Interval(F(11, 10), F(2))) is None


def test_excess_shrinks_with_width():
    # no exact shortcut for the mean-value form: compare the generic enclosure
    from pmcverify.bounds import _Derivs, _midpoint_enclosure
    f = P("p*(1-p)").expand()
    d = _Derivs(f, ("p",))
    prev = None
    for k in range(1, 8):
        w = F(1, 2 ** k)
        iv = Interval(F(1, 2) - w / 2, F(1, 2) + w / 2)
        enc = _midpoint_enclosure(d, (), {"p": iv}, 2)
        true_lo = min(iv.lo * (1 - iv.lo), iv.hi * (1 - iv.hi))
        excess = (enc.hi - F(1, 4)) + (true_lo - enc.lo)
        if prev is not None:
            assert excess <= prev
        prev = excess


CORPUS = ["p*(1-p)", "p^2*q - q*(1-p)", "(1-p)^3 + p*q", "1 - p - q + p*q", "p*q*r - 1/2*p",
          "2*p^2 - 3*p*q + q^2", "(1-p)*(1-q)*r", "p^4 - p^2 + 1/5"]


def _sample_box(rng):
    out = {}
    for n in "pqr":
        a = F(rng.randint(0, 9), 10)
        out[n] = Interval(a, a + F(rng.randint(0, 10 - int(a * 10)), 10))
    return out


def test_enclosure_on_corpus():
    rng = random.Random(7)
    for text in CORPUS:
        f = P(text)
        for _ in range(3):
            b = _sample_box(rng)
            iv = bound_box(f, b, TOL)
            for _ in range(1000 // 3):
                u = {n: c.lo + c.width * F(rng.randint(0, 1000), 1000) for n, c in b.items()}
                assert iv.contains(f.eval(u))


def test_multiaffine_exactness():
    rng = random.Random(3)
    for text in ["1 - p - q + p*q", "(1-p)*(1-q)*r", "p*q*r - 1/2*p"]:
        f = P(text)
        for _ in range(5):
            b = _sample_box(rng)
            names = sorted(f.variables())
            vals = [f.eval(dict(zip(names, c))) for c in itertools.product(*[(b[n].lo, b[n].hi) for n in names])]
            assert bound_box(f, b, TOL) == Interval(min(vals), max(vals))


fr = st.fractions(min_value=0, max_value=1, max_denominator=20)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(CORPUS), fr, fr, fr, fr)
def test_monotone_in_box(text, a, b, c, d):
    f = P(text)
    lo, hi = sorted((a, b))
    lo2, hi2 = sorted((c, d))
    outer = {n: Interval(lo, hi) for n in "pqr"}
    # inner box: affine image of [lo2,hi2] inside [lo,hi]
    inner = {n: Interval(lo + (hi - lo) * lo2, lo + (hi - lo) * hi2) for n in "pqr"}
    big = bound_box(f, outer, TOL).widen(TOL)
    small = bound_box(f, inner, TOL)
    assert big.contains_interval(small)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(CORPUS), fr, fr)
def test_grid_values_inside_bound(text, a, b):
    f = P(text)
    lo, hi = sorted((a, b))
    bx = {n: Interval(lo, hi) for n in "pqr"}
    iv = bound_box(f, bx, TOL)
    grid = [lo + (hi - lo) * F(i, 8) for i in range(9)]
    names = sorted(f.variables())
    vals = [f.eval(dict(zip(names, pt))) for pt in itertools.product(grid, repeat=len(names))] or [f.eval({})]
    assert iv.lo <= min(vals) and max(vals) <= iv.hi
