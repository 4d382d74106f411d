import csv
import json

import pytest
from click.testing import CliRunner

from cmtops.cli import main
from cmtops.glpoly import GlPoly


@pytest.fixture
def run():
    runner = CliRunner()

    def _run(*args):
        return runner.invoke(main, [str(a) for a in args])
    return _run


def test_lax_appendix_entry(run, tmp_path):
    out = tmp_path / "lax.json"
    r = run("lax", "--family", "appendix-R", "--N", 3, "--out", out)
    assert r.exit_code == 0
    obj = json.loads(out.read_text())
    (entry,) = [e for e in obj["entries"] if (e["row"], e["col"]) == (1, 3)]
    (term,) = entry["terms"]
    assert term["gvar"] == [1, 3]


def test_lax_trig_and_usage_errors(run):
    assert run("lax", "--family", "trig", "--N", 2).exit_code == 0
    r = run("lax", "--family", "appendix-R", "--N", 1)
    assert r.exit_code == 2 and "N = 2, 3, 4" in r.output
    assert run("lax", "--family", "nope", "--N", 2).exit_code == 2


def test_ham_rational_two(run, tmp_path):
    out = tmp_path / "h.json"
    assert run("ham", "--family", "appendix-R", "--N", 2, "--kmax", 2, "--out", out).exit_code == 0
    obj = json.loads(out.read_text())
    (h2,) = [h for h in obj["hamiltonians"] if h["k"] == 2]
    G = GlPoly.gens(2)
    assert GlPoly.from_json_obj(h2["poly"]) == (G[1, 2] * (G[1, 1] - G[2, 2])).scalar_mul(2)
    assert h2["index"] == 1


def test_ham_kmax_one_flagged(run):
    r = run("ham", "--family", "appendix-T", "--N", 2, "--kmax", 1)
    assert r.exit_code == 0 and "central" in r.output


def test_check_commute_from_ham_output(run, tmp_path):
    out = tmp_path / "h.json"
    assert run("ham", "--family", "appendix-T", "--N", 3, "--kmax", 3, "--out", out).exit_code == 0
    assert run("check", "commute", "--in", out).exit_code == 0


def test_check_commute_bundled_and_tampered(run, tmp_path):
    assert run("check", "commute", "--family", "rational", "--N", 4).exit_code == 0
    G = GlPoly.gens(2)
    bad = {"polys": [{"name": "a", "poly": G[1, 2].to_json_obj()}, {"name": "b", "poly": G[2, 1].to_json_obj()}]}
    f = tmp_path / "bad.json"
    f.write_text(json.dumps(bad))
    r = run("check", "commute", "--in", f)
    assert r.exit_code == 1 and "FAIL" in r.output


def test_check_against_paper_trig_two(run):
    r = run("check", "against-paper", "--family", "trig", "--N", 2)
    assert r.exit_code == 0
    assert "lambda = -2" in r.output


def test_verify_cases(run, tmp_path):
    r = run("verify", "--case", "sl2-rational", "--seed", 7)
    assert r.exit_code == 0 and r.output.startswith("PASS")
    r = run("verify", "--case", "limit-trig", "--N", 3, "--q", "1e-2,1e-4,1e-6", "--seed", 1)
    assert r.exit_code == 0
    assert run("verify", "--case", "bogus", "--seed", 1).exit_code == 2
    assert run("verify", "--case", "limit-trig", "--N", 3).exit_code == 2
    assert run("verify", "--case", "limit-trig", "--N", 3, "--q", "1e-4,1e-2", "--seed", 1).exit_code == 2


@pytest.mark.parametrize("case", ["sl2-elliptic", "sl2-trig", "sl2-rational", "limit-trig", "limit-rational",
                                  "correspondence", "constructor-xcheck", "eqN", "dynamics"])
def test_verify_every_case_emits_json(run, case):
    r = run("verify", "--case", case, "--N", 3, "--seed", 1)
    assert r.exit_code == 0, r.output
    head, body = r.output.split("\n", 1)
    assert head.startswith("PASS")
    assert json.loads(body)["pass"] is True


def test_verify_reports_byte_identical(run, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run("verify", "--case", "correspondence", "--N", 3, "--seed", 4, "--out", a)
    run("verify", "--case", "correspondence", "--N", 3, "--seed", 4, "--out", b)
    assert a.read_bytes() == b.read_bytes()


def test_verify_failure_exit_code(run):
    r = run("verify", "--case", "limit-rational", "--N", 2, "--seed", 0)
    assert r.exit_code == 1 and r.output.startswith("FAIL")


def test_evolve_fixed_point_and_random(run, tmp_path):
    out = tmp_path / "t.csv"
    r = run("evolve", "--N", 2, "--pair", "1,0", "--steps", 50, "--out", out)
    assert r.exit_code == 0
    summary = json.loads(r.output)
    assert summary["state_change"] == 0.0
    rows = list(csv.reader(out.open()))
    assert len(rows) == 52 and rows[0][0] == "t"
    r = run("evolve", "--N", 2, "--seed", 3, "--out", out)
    assert r.exit_code == 0
    assert json.loads(r.output)["Omega2_drift"] < 1e-8
    assert run("evolve", "--N", 2, "--out", out).exit_code == 2
    assert run("evolve", "--N", 2, "--seed", 1, "--tau", "-1i", "--out", out).exit_code == 2
