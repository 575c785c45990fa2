import csv
import io
import json
import subprocess
import sys

import pytest

from czquant import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_sums_table1_csv(capsys):
    code, out, _ = run(capsys, "sums", "--nbar", "1e4", "--k", "2")
    assert code == 0
    rows = {r["sum"]: r for r in csv.DictReader(l for l in out.splitlines() if not l.startswith("#"))}
    assert float(rows["S10"]["value"]) == pytest.approx(0.500029451785967996, abs=1e-12)
    assert all(float(r["abs_diff"]) <= 1e-12 for r in rows.values())
    check = [l for l in out.splitlines() if l.startswith("# S1+S5")][0]
    assert float(check.split("=")[1]) == pytest.approx(1.0, abs=1e-13)


def test_sums_json_other_nbar(capsys):
    code, out, _ = run(capsys, "sums", "--nbar", "100", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["nbar"] == 100
    assert all("reference" not in r and r["error_bound"] <= 1e-12 for r in data["sums"])
    assert float(data["checks"]["S8+S10"]) == pytest.approx(1.0, abs=1e-13)


@pytest.mark.parametrize("nbar", ["-3", "0", "abc", "nan"])
def test_invalid_nbar(capsys, nbar):
    code, _, err = run(capsys, "sums", "--nbar", nbar)
    assert code == 1 and "error" in err


def test_gate_ideal_mask(capsys):
    code, out, _ = run(capsys, "gate", "--mask", "ideal")
    rep = json.loads(out)
    assert code == 0
    assert rep["trace_preservation_defect"] <= 1e-12 and rep["choi_min_eigenvalue"] >= -1e-12


def test_gate_sideband_flags(capsys, tmp_path):
    path = tmp_path / "gate.json"
    code, _, _ = run(capsys, "gate", "--nbar", "1e4", "--mask", "01110", "--out", str(path))
    rep = json.loads(path.read_text())
    assert code == 0
    assert [s["mode"] for s in rep["steps"]] == ["ideal", "quantized", "quantized", "quantized", "ideal"]
    assert rep["choi_min_eigenvalue"] >= -1e-10


def test_gate_io_error(capsys, tmp_path):
    code, _, err = run(capsys, "gate", "--mask", "ideal", "--out", str(tmp_path / "missing" / "x.json"))
    assert code == 1 and "No such file" in err


def test_bad_mask(capsys):
    code, _, err = run(capsys, "gate", "--mask", "0111")
    assert code == 1 and "mask" in err


def test_run_t0(capsys):
    code, out, _ = run(capsys, "run", "--nbar", "100", "--t", "0", "--initial", "10")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and float(rows[0]["p_fail"]) == 0.0


def test_run_sideband_scenario(capsys):
    code, out, _ = run(capsys, "run", "--nbar", "1e4", "--t", "100", "--initial", "10",
                       "--mask", "sideband-limited")
    (row,) = csv.DictReader(io.StringIO(out))
    assert 3e-3 <= float(row["p_fail"]) <= 3e-2


def test_bad_preset_lists_options(capsys):
    code, _, err = run(capsys, "run", "--initial", "up")
    assert code == 1
    assert "plus-x" in err and "plus-y" in err


def test_explicit_amplitudes_normalized_with_warning(capsys, caplog):
    with caplog.at_level("WARNING", logger="czquant"):
        code, out, _ = run(capsys, "run", "--nbar", "100", "--t", "1", "--initial", "1,0,1,0,0,0,0,0")
    assert code == 0
    assert any("normaliz" in r.message for r in caplog.records)
    code2, out2, _ = run(capsys, "run", "--nbar", "100", "--t", "1", "--initial", "plus-x")
    assert list(csv.reader(io.StringIO(out)))[1][3] == list(csv.reader(io.StringIO(out2)))[1][3]


def test_sweep_order_and_determinism(capsys, tmp_path):
    args = ["sweep", "--nbar", "1e6,1e2", "--t", "3,1..2", "--initial", "11,00", "--mask", "11111"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "nbar,t,initial,p_fail,trace_defect"
    keys = [(float(r[0]), r[2], int(r[1])) for r in csv.reader(lines[1:])]
    assert keys == sorted(keys) and len(keys) == 12


def test_sweep_json(capsys):
    code, out, _ = run(capsys, "sweep", "--nbar", "100", "--t", "1..3", "--initial", "all", "--format", "json")
    data = json.loads(out)
    assert code == 0 and len(data) == 18
    assert all(0 <= r["p_fail"] <= 1 for r in data)


def test_verify_fast(capsys):
    code, out, _ = run(capsys, "verify", "--level", "fast")
    assert code == 0
    assert out.count("PASS") == 3 and "FAIL" not in out


def test_verify_reports_failure(capsys, monkeypatch):
    monkeypatch.setattr(cli, "_check_table1", lambda: (False, "forced"))
    code, out, _ = run(capsys, "verify")
    assert code == 2 and "FAIL  reference-sums" in out


def test_certification_failure_exit_code(capsys, monkeypatch):
    def boom(*a, **k):
        raise cli.channel.WindowError(1e-3, 1e-13)
    monkeypatch.setattr(cli.channel, "channel_report", boom)
    code, _, err = run(capsys, "gate")
    assert code == 3 and "certification" in err


def test_unknown_command(capsys):
    assert run(capsys, "frobnicate")[0] == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "czquant", "sums", "--nbar", "1e4", "--format", "json"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout)["sums"][0]["sum"] == "S1"
