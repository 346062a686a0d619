import io
import json
from fractions import Fraction

import pytest

from pmcverify.cli import parse_model, parse_property, parse_region, run
from pmcverify.engine import Property
from pmcverify.fixtures import FIXTURES, fixture
from pmcverify.formats import ParseError, serialize_model


@pytest.fixture
def chain_file(tmp_path):
    p = tmp_path / "chain.pmc"
    p.write_text(FIXTURES["three-step"])
    return str(p)


def call(argv, stdin=None, monkeypatch=None):
    out = io.StringIO()
    if stdin is not None:
        monkeypatch.setattr("sys.stdin", io.StringIO(stdin))
    code = run(argv, out)
    return code, out.getvalue()


def last_record(text):
    return json.loads(text.strip().splitlines()[-1])


def test_verify_all_sat(chain_file):
    code, out = call(["verify", "-m", chain_file, "-r", "0.3<=p<=0.6, 0.6<=q<=0.7", "-p", 'P<0.2 [F "good"]'])
    assert code == 0
    assert "verdict: AllSat" in out
    assert last_record(out)["verdict"] == "AllSat"


def test_verify_refuted_prints_witness(chain_file):
    code, out = call(["verify", "-m", chain_file, "-r", "0.3<=p<=0.6, 0.6<=q<=0.7", "-p", 'P<0.15 [F "good"]'])
    assert code == 1
    assert "witness:" in out
    rec = last_record(out)
    assert rec["verdict"] == "Refuted" and set(rec["witness"]) == {"p", "q"}


def test_gen_dn_piped_into_verify(monkeypatch):
    code, model = call(["gen", "dn", "--n", "24"])
    assert code == 0
    code, out = call(["verify", "-r", "0<=p*<=1/12", "-p", 'P>=0.01 [F "good"]', "--json"],
                     stdin=model, monkeypatch=monkeypatch)
    assert code == 0
    rec = json.loads(out)
    assert rec["regions_checked"] == 1


def test_unknown_exit_code(chain_file):
    code, _ = call(["verify", "-m", chain_file, "-r", "0.3<=p<=0.6, 0.6<=q<=0.7", "-p", 'P<=0.175 [F "good"]',
                    "--max-regions", "20"])
    assert code == 2


def test_dump_regions(chain_file, tmp_path):
    dump = tmp_path / "regions.jsonl"
    code, out = call(["verify", "-m", chain_file, "-r", "0.3<=p<=0.6, 0.6<=q<=0.7", "-p", 'P<0.2 [F "good"]',
                      "--bigstep", "off", "--dump-regions", str(dump), "--json"])
    assert code == 0
    lines = [json.loads(x) for x in dump.read_text().splitlines()]
    assert len(lines) == json.loads(out)["regions_checked"]
    assert all("estimate" in x for x in lines)


def test_region_from_file(chain_file, tmp_path):
    rf = tmp_path / "r.txt"
    rf.write_text("0.3<=p<=0.4, 0.6<=q<=0.7\n")
    code, out = call(["verify", "-m", chain_file, "-r", f"@{rf}", "-p", 'P<0.2 [F "good"]', "--json"])
    assert code == 0


def test_malformed_model_exit_3(tmp_path, capsys):
    bad = tmp_path / "bad.pmc"
    bad.write_text("params p\nstates a g\ninit a\ntarget g\ntrans a g : p +* 1\n")
    code, _ = call(["verify", "-m", str(bad), "-r", "0<=p<=1", "-p", 'P<0.2 [F "good"]'])
    assert code == 3
    assert "5:" in capsys.readouterr().err


def test_region_with_unknown_parameter_exit_3(chain_file):
    code, _ = call(["verify", "-m", chain_file, "-r", "0<=p<=1, 0<=q<=1, 0<=z<=1", "-p", 'P<0.2 [F "good"]'])
    assert code == 3


def test_bad_property_exit_3(chain_file):
    code, _ = call(["verify", "-m", chain_file, "-r", "0<=p<=1, 0<=q<=1", "-p", "P<<0.2"])
    assert code == 3


def test_missing_required_flag_exit_3(chain_file):
    assert call(["verify", "-m", chain_file, "-p", 'P<0.2 [F "good"]'])[0] == 3


def test_missing_file_exit_3():
    assert call(["transform", "-m", "/nonexistent/model.pmc"])[0] == 3


def test_transform_three_step(chain_file):
    code, out = call(["transform", "-m", chain_file])
    assert code == 0
    D = parse_model(out)
    assert D.trans["s0"]["s2"] == fixture("three-step-merged").trans["s0"]["s2"]


def test_substitute_three_step(chain_file):
    code, out = call(["substitute", "-m", chain_file, "-r", "0.3<=p<=0.6, 0.6<=q<=0.7"])
    assert code == 0
    assert "trans s0 s1 : [3/10, 3/5]" in out


def test_analyze_imc(tmp_path):
    f = tmp_path / "cycle.imc"
    f.write_text("states s0 s1 good\ninit s0\ntarget good\ntrans s0 s1 : [0, 1]\ntrans s0 good : [0, 1]\n"
                 "trans s1 s0 : [0, 1]\ntrans s1 good : [0, 1]\n")
    code, out = call(["analyze-imc", "-m", str(f), "--json"])
    assert code == 0
    rec = json.loads(out)
    assert rec["mecs"] == [["s0", "s1"]]
    assert rec["interval"] == [0.0, 1.0]


def test_gen_fixture():
    code, out = call(["gen", "two-stage"])
    assert code == 0 and parse_model(out).params == ("p", "q")


# -- parsing ----------------------------------------------------------------------------

def test_parse_three_step():
    D = parse_model(FIXTURES["three-step"])
    assert len(D.states) == 5 and D.params == ("p", "q")


def test_parse_property_nonstrict():
    assert parse_property('P<=0.2 [F "good"]') == Property("<=", Fraction(1, 5), "good")


def test_parse_property_default_label():
    assert parse_property("P>=0.01").label == "good"


def test_region_unknown_parameter():
    with pytest.raises(ParseError):
        parse_region("0 <= z <= 1", ["p"])


def test_region_missing_parameter():
    with pytest.raises(ParseError):
        parse_region("0 <= p <= 1", ["p", "q"])


def test_region_discrete_bounds_must_be_integers():
    with pytest.raises(ParseError):
        parse_region("0 <= k <= 1/2", ["k"], frozenset({"k"}))


def test_duplicate_transition_rejected():
    with pytest.raises(ParseError) as e:
        parse_model("params p\nstates a g\ninit a\ntarget g\ntrans a g : p\ntrans a g : 1 - p\n")
    assert e.value.line == 6


def test_unknown_state_rejected():
    with pytest.raises(ParseError):
        parse_model("states a g\ninit a\ntarget g\ntrans a h : 1\n")


def test_unknown_parameter_in_expression_rejected():
    with pytest.raises(ParseError):
        parse_model("params p\nstates a g\ninit a\ntarget g\ntrans a g : r\n")


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_round_trip(name):
    D = parse_model(FIXTURES[name])
    E = parse_model(serialize_model(D))
    assert E.states == D.states and E.params == D.params and E.good == D.good
    for s in D.trans:
        assert set(E.trans[s]) == set(D.trans[s])
        for t in D.trans[s]:
            assert E.trans[s][t].same_terms(D.trans[s][t])
