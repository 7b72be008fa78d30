import csv
import hashlib
import io
import json
import math
import shutil
import subprocess
import sys

import pytest

from cgdms import NumericalFailure, partition_pressure
from cgdms import cli
from cgdms.cli import main
from cgdms.fixtures import fixture_path, fixture_system

from conftest import GOLDEN, LOG2_LOG3


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def write_config(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(data if isinstance(data, str) else json.dumps(data))
    return p


def ternary_config():
    return json.loads(fixture_path("ternary").read_text())


# per-command outputs ------------------------------------------------------------

def test_inspect(capsys):
    rep = run_json(capsys, "inspect", fixture_path("perturbed_ternary"))
    c = rep["constants"]
    assert c["flags"]["strong_separation"] and c["flags"]["exponential_geometry"]
    assert 0.4904 < c["lambda"] < 0.4906
    assert c["separation_a"] == pytest.approx(1 / 3)
    assert rep["graph"]["incidence"] == [[1, 1], [1, 1]]


def test_config_digest_is_sha256_of_file(capsys):
    path = fixture_path("ternary")
    rep = run_json(capsys, "inspect", path)
    assert rep["config_digest"] == hashlib.sha256(path.read_bytes()).hexdigest()


def test_pressure_json_round_trips(capsys, ternary):
    rep = run_json(capsys, "pressure", fixture_path("ternary"), "--t-grid", "0,0.5,1", "--depth", "6")
    rows = rep["pressure"]["rows"]
    assert [r["t"] for r in rows] == [0.0, 0.5, 1.0]
    for r in rows:
        assert r["estimate"] == partition_pressure(ternary, r["t"], n=6).value
        assert r["estimate"] == pytest.approx(math.log(2) - r["t"] * math.log(3), abs=1e-13)
    assert rep["pressure"]["monotone"] and rep["pressure"]["convex"]


def test_pressure_csv_seventeen_digits(capsys, perturbed):
    code, out, _ = run(capsys, "pressure", fixture_path("perturbed_ternary"), "--t-grid", "0:1:0.5",
                       "--depth", "6", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [float(r["t"]) for r in rows] == [0.0, 0.5, 1.0]
    for r in rows:
        # %.17g is enough to recover the double exactly
        assert float(r["estimate"]) == partition_pressure(perturbed, float(r["t"]), n=6).value
        assert float(r["lower"]) <= float(r["estimate"]) <= float(r["upper"])


def test_pressure_matrix_strategy(capsys):
    rep = run_json(capsys, "pressure", fixture_path("golden_mean"), "--t-grid", "0",
                   "--depth", str(2 ** 20), "--strategy", "matrix")
    assert rep["pressure"]["rows"][0]["estimate"] == pytest.approx(math.log(GOLDEN), abs=1e-5)


def test_dimension_methods(capsys):
    rep = run_json(capsys, "dimension", fixture_path("ternary"), "--tol", "1e-10")
    assert rep["dimension"]["estimate"] == pytest.approx(LOG2_LOG3, abs=1e-9)
    rep = run_json(capsys, "dimension", fixture_path("ratios_half_quarter"), "--method", "moran")
    assert rep["dimension"]["estimate"] == pytest.approx(math.log2(GOLDEN), abs=1e-12)
    rep = run_json(capsys, "dimension", fixture_path("ternary"), "--method", "moran")
    assert rep["dimension"]["closed_form_difference"] < 1e-15
    rep = run_json(capsys, "dimension", fixture_path("golden_matrix"), "--method", "spectral")
    assert rep["dimension"]["estimate"] == pytest.approx(math.log2(GOLDEN), abs=1e-10)
    rep = run_json(capsys, "dimension", fixture_path("construction_2x2"), "--method", "spectral")
    assert rep["dimension"]["estimate"] == pytest.approx(LOG2_LOG3, abs=1e-10)


def test_dimension_moran_rejected_for_perturbed(capsys):
    code, _, err = run(capsys, "dimension", fixture_path("perturbed_ternary"), "--method", "moran")
    assert code == 2 and "moran" in err


def test_scaling_command(capsys):
    rep = run_json(capsys, "scaling", fixture_path("ternary"), "--dual-word", "0,1,0")
    assert rep["scaling"]["estimate"] == pytest.approx(1 / 3, rel=1e-15)
    assert rep["scaling"]["error_bound"] == 0.0
    code, out, _ = run(capsys, "scaling", fixture_path("perturbed_ternary"), "--dual-word",
                       "0,1,1,0,1,0,0,1", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 8 and all(0.17 < float(r["ratio"]) < 0.6 for r in rows)


def test_equiv_command(capsys):
    rep = run_json(capsys, "equiv", fixture_path("ternary"), fixture_path("ternary_conjugate"),
                   "--samples", "16", "--seed", "0")
    eq = rep["equivalence"]
    assert eq["verdict"] == "equivalent" and eq["rate"] > 0
    assert len(rep["quotients"]) == 16 and len(rep["quotients"][0]) == 24
    rep = run_json(capsys, "equiv", fixture_path("ternary"), fixture_path("half_ratio"),
                   "--samples", "8", "--seed", "0")
    assert rep["equivalence"]["verdict"] == "not-equivalent"
    assert rep["equivalence"]["assumptions_met"] is False


def test_equiv_csv_table(capsys):
    code, out, _ = run(capsys, "equiv", fixture_path("ternary"), fixture_path("ternary_conjugate"),
                       "--samples", "4", "--depth", "10", "--seed", "1", "--format", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0][:2] == ["n", "max_abs_q_minus_1"] and len(rows) == 11 and len(rows[1]) == 6


def test_out_flag_writes_file(capsys, tmp_path):
    target = tmp_path / "o.json"
    code, out, _ = run(capsys, "inspect", fixture_path("ternary"), "--out", target)
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["config"] == "ternary"


def test_report_determinism_and_timings(capsys):
    a = run(capsys, "report", "--seed", "3")[1]
    b = run(capsys, "report", "--seed", "3")[1]
    assert a == b
    rep = json.loads(a)
    assert [f["config"] for f in rep["fixtures"]] == ["ternary", "perturbed_ternary", "golden_mean",
                                                       "construction_2x2"]
    assert "timings_seconds" not in a
    assert rep["equivalence"]["ternary_vs_conjugate"]["verdict"] == "equivalent"
    rep = run_json(capsys, "report", fixture_path("ternary"), "--seed", "3", "--timings")
    assert "timings_seconds" in rep["fixtures"][0]


def test_report_with_failing_config_records_error(capsys):
    rep = run_json(capsys, "report", fixture_path("touching"), "--seed", "0")
    assert rep["fixtures"][0]["error"]["exit_code"] == 3


# exit codes ---------------------------------------------------------------------

def test_report_requires_seed(capsys):
    code, _, err = run(capsys, "report")
    assert code == 2 and "seed" in err


def test_usage_error_exits_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["pressure"])
    assert info.value.code == 2
    code, _, _ = run(capsys, "pressure", fixture_path("ternary"), "--t-grid", "0:x:1")
    assert code == 2


def test_missing_config_file(capsys, tmp_path):
    code, _, err = run(capsys, "inspect", tmp_path / "absent.json")
    assert code == 2


def test_malformed_json_reports_position(capsys, tmp_path):
    p = write_config(tmp_path, '{\n  "schema_version": 1,\n  "kind": \n}')
    code, _, err = run(capsys, "inspect", p)
    assert code == 2 and "cfg.json:4:1" in err


def test_missing_map_exits_2(capsys, tmp_path):
    data = ternary_config()
    data["maps"] = data["maps"][:1]
    code, _, err = run(capsys, "inspect", write_config(tmp_path, data))
    assert code == 2 and "edge 1 has no map" in err


def test_schema_violation_names_field(capsys, tmp_path):
    data = ternary_config()
    data["maps"][0]["ratio"] = "one third"
    code, _, err = run(capsys, "inspect", write_config(tmp_path, data))
    assert code == 2 and "maps" in err


def test_touching_fixture_exits_3(capsys):
    code, _, err = run(capsys, "inspect", fixture_path("touching"))
    assert code == 3 and "SeparationViolated" in err


def test_expanding_map_exits_3(capsys, tmp_path):
    # slope of x/3 + 1/3 + sin(2 pi x)/8 reaches 1/3 + pi/4 > 1 while the image stays in [0, 1]
    data = ternary_config()
    data["maps"][0] = {"family": "perturbed", "slope": "1/3", "intercept": "1/3", "amplitude": "1/8",
                       "profile": "sin_2pi"}
    code, _, err = run(capsys, "inspect", write_config(tmp_path, data))
    assert code == 3 and ("NotAContraction" in err or "DegenerateDerivative" in err)


def test_invalid_depth_exits_2(capsys):
    code, _, err = run(capsys, "pressure", fixture_path("golden_mean"), "--t-grid", "0", "--depth", "0")
    assert code == 2 and "InvalidDepth" in err


def test_budget_exits_4(capsys, monkeypatch):
    code, _, err = run(capsys, "pressure", fixture_path("ternary"), "--depth", "12", "--budget", "100")
    assert code == 4 and "BudgetExceeded" in err
    monkeypatch.setenv("CGDMS_WORD_BUDGET", "100")
    code, _, _ = run(capsys, "pressure", fixture_path("ternary"), "--depth", "12")
    assert code == 4


def test_numerical_failure_exits_5(capsys, monkeypatch):
    def boom(*a, **k):
        raise NumericalFailure("forced")
    monkeypatch.setattr(cli, "spectral_dimension", boom)
    code, _, err = run(capsys, "dimension", fixture_path("golden_matrix"), "--method", "spectral")
    assert code == 5 and "forced" in err


@pytest.mark.skipif(shutil.which("cgdms") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["cgdms", "inspect", str(fixture_path("ternary"))], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["config"] == "ternary"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "cgdms.cli", "scaling", str(fixture_path("ternary")),
                          "--dual-word", "1"], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["scaling"]["depth"] == 1


def test_fixture_systems_load():
    for name in ("ternary", "perturbed_ternary", "golden_mean", "ternary_conjugate", "half_ratio"):
        assert fixture_system(name).graph.edge_count == 2
