import json
import math

import pytest

from combgas.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def run_json(capsys, *argv):
    code, out = run_cli(capsys, *argv)
    doc = json.loads(out)
    return code, doc


def test_norm_catalog_star(capsys):
    code, doc = run_json(capsys, "norm", "--family", "catalog:star",
                         "--param", "n=3")
    assert code == 0
    assert doc["result"]["lambda0"] == pytest.approx(3 / math.sqrt(2),
                                                     abs=1e-7)
    assert doc["manifest"]["command"] == "norm"


def test_norm_comb_d2(capsys):
    code, doc = run_json(capsys, "norm", "--family", "comb", "--param", "d=2")
    assert code == 0
    assert doc["result"]["lambda0"] == pytest.approx(2 * math.sqrt(5),
                                                     abs=1e-7)


def test_hidden_h_graph(capsys):
    code, doc = run_json(capsys, "hidden", "--family", "catalog:h_graph",
                         "--param", "k=2")
    assert code == 0
    assert doc["result"]["verdict"] == "hidden"
    assert doc["result"]["gap"] == pytest.approx(2 * math.sqrt(2) - 2,
                                                 abs=1e-7)


def test_build_inline_and_bad_input(capsys):
    doc = {"builder": "chain", "params": {"n": 2}}
    code, out = run_json(capsys, "build", "--inline", json.dumps(doc))
    assert code == 0
    assert len(out["result"]["labels"]) == 5
    assert len(out["result"]["edges"]) == 4
    code, _ = run_cli(capsys, "build", "--inline", "{not json")
    assert code == 1
    code, _ = run_cli(capsys, "build", "--inline",
                      json.dumps({"builder": "nope"}))
    assert code == 1


def test_unknown_family_exit_code(capsys):
    code, _ = run_cli(capsys, "norm", "--family", "catalog:bogus")
    assert code == 1


def test_transience_exit_codes(capsys):
    code, doc = run_json(capsys, "transience", "--param", "d=3")
    assert code == 0
    assert doc["result"]["verdict"] == "transient"
    code = main(["transience", "--param", "d=2", "--out", "/dev/null"])
    assert code == 3


def test_spectrum_csv_determinism(capsys, tmp_path):
    args = ["spectrum", "--family", "comb", "--param", "d=1", "--n", "6",
            "--format", "csv"]
    _, out1 = run_cli(capsys, *args)
    _, out2 = run_cli(capsys, *args)
    assert out1 == out2
    assert out1.startswith("# manifest:")
    assert "eigenvalue,weight" in out1


def test_density_and_mu_solve_round_trip(capsys):
    code, doc = run_json(capsys, "mu-solve", "--family", "comb",
                         "--param", "d=1", "--n", "8", "--beta", "1",
                         "--rho", "0.25")
    assert code == 0
    mu = doc["result"]["mu"]
    code, doc2 = run_json(capsys, "density", "--family", "comb",
                          "--param", "d=1", "--n", "8", "--beta", "1",
                          "--mu", str(mu), "--shift",
                          str(doc["result"]["shift"]))
    assert code == 0
    assert doc2["result"]["density"] == pytest.approx(0.25, rel=1e-6)


def test_critical(capsys):
    code, doc = run_json(capsys, "critical", "--beta", "1", "--gap",
                         str(2 * math.sqrt(10) - 2))
    assert code == 0
    assert doc["result"]["critical_density"] == pytest.approx(
        0.0041211512824647, abs=1e-10)


def test_bec_sweep_and_limit(capsys):
    code, doc = run_json(capsys, "bec", "--d", "3", "--beta", "1", "--c", "1",
                         "--n", "4:6:2", "--xi", "0,0,0,0", "--limit",
                         "--smooth", "block")
    assert code == 0
    assert len(doc["result"]["sweep"]) == 2
    assert doc["result"]["limit"]["condensate_slope"] == pytest.approx(
        3 / math.sqrt(10), rel=1e-6)


def test_bec_divergence_verdict(capsys):
    code, doc = run_json(capsys, "bec", "--d", "1", "--beta", "1",
                         "--mu-power", "1", "--n", "2:4", "--xi", "0,0",
                         "--limit")
    assert code == 3
    assert doc["result"]["limit"]["verdict"] == "divergent"


def test_ids_json_round_trip(capsys):
    code, doc = run_json(capsys, "ids", "--family", "comb", "--param", "d=1",
                         "--n", "8")
    assert code == 0
    pts = doc["result"]["points"]
    assert pts == sorted(pts)
    assert abs(sum(doc["result"]["weights"]) - 1.0) < 1e-12
