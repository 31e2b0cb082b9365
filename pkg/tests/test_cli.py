import csv
import io
import json

import pytest

from tetra3d import cache, rmatrix
from tetra3d.cli import EXIT_CONVERGENCE, EXIT_OK, EXIT_USAGE, EXIT_VIOLATED, SCHEMA, run


def call(*argv):
    buf = io.StringIO()
    code = run(list(argv), out=buf)
    text = buf.getvalue()
    return code, (json.loads(text) if text else None), text


@pytest.fixture(autouse=True)
def no_cache(monkeypatch):
    monkeypatch.delenv(cache.ENV_VAR, raising=False)


def test_element_low_order():
    code, rep, _ = call("element", "--idx", "0,1,0,1,0,1")
    assert code == EXIT_OK
    assert rep["schema"] == SCHEMA
    assert rep["result"]["poly"] == {"-2": "1", "0": "-1"}
    assert rep["result"]["idx"] == [0, 1, 0, 1, 0, 1]


def test_element_values():
    _, rep, _ = call("element", "--idx", "0,1,0,1,0,1", "--q", "0.5")
    assert rep["result"]["value_at_q"] == pytest.approx(3.0)
    _, rep, _ = call("element", "--idx", "1,2,1,1,2,1", "--q", "1/2", "--mode", "exact")
    assert rep["result"]["value_exact"] == "158"


def test_bad_index_is_usage_error(capsys):
    code, _, _ = call("element", "--idx", "1,2,3")
    assert code == EXIT_USAGE
    assert "six" in capsys.readouterr().err


def test_verify_tetra():
    code, rep, _ = call("verify", "tetra", "--max-index", "0")
    assert code == EXIT_OK and rep["result"]["checked"] == 1
    code, rep, _ = call("verify", "tetra", "--max-index", "1")
    assert code == EXIT_OK
    assert rep["result"]["checked"] == 4096 and rep["result"]["failures"] == []


def test_sampled_sweep_embeds_seed_and_is_deterministic():
    args = ("verify", "tetra", "--max-index", "2", "--samples", "20", "--seed", "9")
    a, b = call(*args), call(*args)
    assert a[2] == b[2]
    assert a[1]["result"]["seed"] == 9 and a[1]["params"]["seed"] == 9


def test_dressed_sweep():
    code, rep, _ = call("verify", "tetra", "--max-index", "1", "--dressed", "--seed", "4")
    assert code == EXIT_OK and rep["result"]["checked"] == 4096
    code, _, _ = call("verify", "tetra", "--max-index", "1", "--dressed", "--mode", "exact")
    assert code == EXIT_USAGE


def test_map_negative_control_exit_status():
    assert call("verify", "map", "--cutoff", "3")[0] == EXIT_OK
    code, rep, _ = call("verify", "map", "--cutoff", "3", "--k3-power", "3")
    assert code == EXIT_VIOLATED and rep["failures"] > 0


def test_symmetry():
    code, rep, _ = call("verify", "symmetry", "--maxn", "2")
    assert code == EXIT_OK and rep["result"]["P13"]["passed"]


def test_ybe_and_block():
    assert call("verify", "ybe", "--n", "2", "--max-charge", "1", "--trials", "1")[0] == EXIT_OK
    code, rep, _ = call("block", "--n", "1", "--charge-i", "0", "--charge-j", "0", "--w", "0.5")
    assert code == EXIT_OK and rep["result"]["matrix"][0][0] == pytest.approx(2.0)


def test_divergent_block_reports_convergence_failure():
    code, rep, _ = call("block", "--n", "2", "--w", "0.3", "--q", "0.5")
    assert code == EXIT_CONVERGENCE
    assert rep["error"]["kind"] == "convergence" and "w=0.3" in rep["error"]["message"]


def test_exact_mode_rejects_float_commands(capsys):
    assert call("partition", "--mode", "exact")[0] == EXIT_USAGE
    assert "--mode float" in capsys.readouterr().err


def test_compare_reports_strict_and_gauged():
    code, rep, _ = call("compare", "sixvertex", "--trials", "2")
    assert code == EXIT_VIOLATED
    assert rep["result"]["gauge_dev"] < 1e-10


def test_partition_and_cutoff_series():
    code, rep, _ = call("partition", "--L", "1", "--M", "1", "--N", "1", "--sector", "1", "--cutoff", "2")
    assert code == EXIT_OK
    res = rep["result"]
    assert [r["cutoff"] for r in res["cutoff_series"]] == [0, 1, 2]
    assert res["cutoff_series"][-1]["value"] == pytest.approx(res["value"])
    code, rep, _ = call("partition", "--L", "1", "--M", "1", "--N", "1", "--sector", "1", "--cutoff", "2",
                        "--method", "enumeration")
    assert rep["result"]["value"] == pytest.approx(res["value"], rel=1e-12)


def test_full_partition_warns(capsys):
    code, rep, _ = call("partition", "--full", "--L", "1", "--M", "1", "--N", "1", "--cutoff", "1",
                        "--max-sector", "2")
    assert code == EXIT_OK and len(rep["result"]["cutoff_series"]) == 3
    assert "damping" in capsys.readouterr().err


def test_transfer_build_csv(tmp_path):
    out = tmp_path / "spec.csv"
    code, rep, _ = call("transfer", "build", "--M", "2", "--N", "1", "--sector", "1", "--cutoff", "2",
                        "--spectrum-csv", str(out))
    assert code == EXIT_OK
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == len(rep["result"]["basis"])


def test_transfer_commute_and_duality():
    code, rep, _ = call("transfer", "commute", "--M", "2", "--N", "2", "--sector", "1",
                        "--pairs", "0.3,0.2;0.1,0.4", "--cutoffs", "1,2")
    assert code == EXIT_OK and rep["result"]["passed"]
    assert call("transfer", "commute", "--pairs", "0.3")[0] == EXIT_USAGE
    code, rep, _ = call("duality", "--M", "1", "--N", "2")
    assert code == EXIT_OK and rep["result"]["passed"]


def test_output_file(tmp_path):
    out = tmp_path / "r.json"
    buf = io.StringIO()
    assert run(["qpoly", "--n", "1", "--a", "1,1,1", "--output", str(out)], out=buf) == EXIT_OK
    assert buf.getvalue() == ""
    assert json.loads(out.read_text())["result"]["poly"] == {"-6": "1", "-2": "-2", "0": "1"}


def test_qpoly_pole_domain_is_usage_error():
    assert call("qpoly", "--n", "2", "--a", "0,1,1", "--form", "hypergeometric")[0] == EXIT_USAGE


def test_unknown_command():
    assert run(["nosuch"], out=io.StringIO()) == EXIT_USAGE


def test_cache_round_trip(tmp_path, monkeypatch):
    monkeypatch.setenv(cache.ENV_VAR, str(tmp_path))
    call("element", "--idx", "2,3,1,2,3,1")
    path = tmp_path / cache.FILENAME
    assert path.exists()
    saved = dict(rmatrix.R_MEMO)
    rmatrix.R_MEMO.clear()
    try:
        assert cache.load() > 0
        assert rmatrix.R_MEMO[(2, 3, 1, 2, 3, 1)] == saved[(2, 3, 1, 2, 3, 1)]
    finally:
        rmatrix.R_MEMO.update(saved)
