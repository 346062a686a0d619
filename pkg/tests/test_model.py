import random
from fractions import Fraction as F

import pytest

from oracles import power_iteration, random_box, random_pmc
from pmcverify.bounds import Interval
from pmcverify.fixtures import FIXTURES, fixture, gen_dn
from pmcverify.formats import parse_model, serialize_model
from pmcverify.model import (MC, NotWellDefined, PMC, instantiate, interval_substitute, is_member,
                             mc_reach, reach_probability)
from pmcverify.poly import Polynomial
from pmcverify.region import Region, sample


def test_instantiate_three_step():
    M = instantiate(fixture("three-step"), {"p": F(2, 5), "q": F(7, 10)})
    assert isinstance(M, MC)
    assert M.trans["s0"] == {"s1": F(2, 5), "bad": F(3, 5)}
    assert M.trans["s1"] == {"s2": F(3, 5), "bad": F(2, 5)}


def test_instantiate_not_well_defined_at_root():
    r = instantiate(gen_dn(5), {f"p{i}": F(9, 10) for i in range(1, 5)})
    assert isinstance(r, NotWellDefined) and r.state == "s0"


def test_parameterless_identity():
    D = parse_model("states a b\ninit a\ntarget b\ntrans a b : 1\n")
    M = instantiate(D, {})
    assert M.trans == {"a": {"b": 1}, "b": {"b": 1}}


def test_mc_reach_single_path():
    M = instantiate(fixture("three-step"), {"p": F(2, 5), "q": F(7, 10)})
    # 0.4 * 0.6 * 0.7
    assert mc_reach(M)["s0"] == F(21, 125)


def test_reach_at_maximum():
    assert reach_probability(fixture("three-step"), {"p": F(1, 2), "q": F(7, 10)}) == F(7, 40)


def test_init_in_good():
    M = MC(("g",), "g", {"g": {"g": F(1)}}, frozenset({"g"}))
    assert mc_reach(M)["g"] == 1


def test_interval_substitute_three_step():
    D = fixture("three-step")
    I = interval_substitute(D, {"p": Interval(F(3, 10), F(3, 5)), "q": Interval(F(3, 5), F(7, 10))})
    assert I.trans["s0"]["s1"] == Interval(F(3, 10), F(3, 5))
    assert I.trans["s1"]["s2"] == Interval(F(2, 5), F(7, 10))
    assert I.trans["s2"]["good"] == Interval(F(3, 5), F(7, 10))
    assert I.bad == {"bad"}


def test_interval_substitute_merged_chain():
    D = fixture("three-step-merged")
    I = interval_substitute(D, {"p": Interval(F(3, 10), F(3, 5)), "q": Interval(F(3, 5), F(7, 10))})
    assert I.trans["s0"]["s2"] == Interval(F(21, 100), F(1, 4))
    assert I.trans["s2"]["good"] == Interval(F(3, 5), F(7, 10))


def test_parameterless_substitution_is_point():
    D = parse_model("states a b c\ninit a\ntarget b\ntrans a b : 1/3\ntrans a c : 2/3\n")
    I = interval_substitute(D, {})
    assert I.trans["a"] == {"b": Interval.point(F(1, 3)), "c": Interval.point(F(2, 3))}


def test_undeclared_parameter_rejected():
    with pytest.raises(ValueError):
        PMC(("a",), ("p",), "a", {"a": {"a": Polynomial.param("q")}}, frozenset())


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_mc_reach_agrees_with_power_iteration(name):
    D = fixture(name)
    R = Region.from_dict({p: Interval(F(1, 10), F(9, 10)) for p in D.params})
    for u in sample(R, D, 5, seed=1):
        M = instantiate(D, u)
        exact = mc_reach(M)
        approx = power_iteration(M)
        for s in M.states:
            assert abs(float(exact[s]) - approx[s]) < 1e-9


def test_mc_reach_random_models_against_power_iteration():
    rng = random.Random(11)
    for _ in range(10):
        D = random_pmc(rng, n_states=rng.randint(4, 10), n_params=2)
        R = Region.from_dict(random_box(rng, D.params))
        for u in sample(R, D, 3, seed=rng.randint(0, 99)):
            M = instantiate(D, u)
            exact = mc_reach(M)
            approx = power_iteration(M)
            assert all(abs(float(exact[s]) - approx[s]) < 1e-9 for s in M.states)


def test_substitution_soundness():
    rng = random.Random(5)
    models = [fixture(n) for n in sorted(FIXTURES)] + [random_pmc(rng, 8, 3) for _ in range(5)]
    for D in models:
        b = random_box(rng, D.params)
        I = interval_substitute(D, b)
        for u in sample(Region.from_dict(b), D, 200, seed=3):
            assert is_member(instantiate(D, u), I)


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_serialize_parse_round_trip(name):
    D = parse_model(FIXTURES[name])
    D2 = parse_model(serialize_model(D))
    assert D2.states == D.states and D2.params == D.params and D2.good == D.good
    for s in D.states:
        assert D2.trans[s].keys() == D.trans[s].keys()
        for t in D.trans[s]:
            assert D2.trans[s][t].same_terms(D.trans[s][t])
