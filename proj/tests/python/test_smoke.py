import os

import pytest

import odecert

FIXTURES = os.environ.get("ODECERT_FIXTURES", os.path.join(os.path.dirname(__file__), "..", "fixtures"))


def test_certify_cubic():
    cert = odecert.certify("x' = t", "x = t^2/2 + x0")
    assert cert["status"] == "Certified"
    assert cert["components"][0]["verdict"] == "Equal"


def test_certify_wrong_solution_fails():
    cert = odecert.certify("x' = t", "x = t^2 + x0")
    assert cert["status"] == "Failed"


def test_solve_then_certify():
    res = odecert.solve("x' = -y, y' = x")
    assert res["status"] == "solved"
    sol = res["solutions"][0]
    assert odecert.certify("x' = -y, y' = x", sol["solution"], domain=sol["domain"])["status"] == "Certified"


def test_conditional_needs_assumption():
    cert = odecert.certify("x' = 1/(2*x)", "x = sqrt(t + x0^2)", domain="(0,inf)")
    assert cert["status"] in ("Certified", "ConditionallyCertified")
    assert cert["conditions"]


def test_refute_finds_counterexample():
    rows = odecert.refute("x' = x", "x = x0*exp(2*t)", seed=3, trials=200)
    assert rows[0]["counterexample"] is not None


def test_differentiate_emits_provisos():
    d, conds = odecert.differentiate("ln(t)")
    assert odecert.equal(d, "1/t")
    assert any("t > 0" in c for c in conds)


def test_parse_errors_raise():
    with pytest.raises(odecert.ParseError):
        odecert.parse_system("x' = (t")
    with pytest.raises(odecert.Error):
        odecert.certify("x' = t", "y = t")


def test_classify_and_corpus():
    assert odecert.classify("x' = v, v' = -g") == "simple"
    entries = odecert.extract_corpus(os.path.join(FIXTURES, "corpus"))
    assert entries and all(e["complexity"] in ("simple", "complex") for e in entries)


def test_suite_rows():
    rows = odecert.run_suite(jobs=2)
    assert len(rows) == 18
    assert all("outcome" in r for r in rows)
