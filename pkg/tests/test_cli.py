import json
import subprocess
import sys

import pytest

from korm import report as rep
from korm.cli import main

from conftest import data_path

ABALONE = ["--input", data_path("abalone.csv"), "--schema", data_path("abalone.schema"), "--header"]


def _csv(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_run_json(tmp_path, capsys):
    out = tmp_path / "r.json"
    fig = tmp_path / "trace.png"
    assert main(["run", *ABALONE, "--output", str(out), "--figure", str(fig)]) == 0
    report = rep.load_report(out)
    assert report["kind"] == "korm"
    assert report["metadata"]["dataset"]["skipped_columns"] == [8]
    assert fig.stat().st_size > 0


def test_run_csv_to_stdout(capsys):
    assert main(["run", *ABALONE, "--format", "csv", "--seed", "2"]) == 0
    first = capsys.readouterr().out.splitlines()[0]
    assert first.startswith("j,L_j,F_j")


def test_run_trace_and_timing(tmp_path):
    out = tmp_path / "r.json"
    assert main(["run", *ABALONE, "--trace", "--timing", "--output", str(out)]) == 0
    report = rep.load_report(out)
    assert "invocations" in report["phases"][0] and "wall_seconds" in report["timing"]


def test_constraint_violation_exit_2(capsys):
    assert main(["run", *ABALONE, "--gamma", "1", "--beta", "1"]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConstraintError" and err["details"]["lhs"] == 37


def test_range_error_exit_2(capsys):
    assert main(["run", *ABALONE, "--k", "0"]) == 2


def test_missing_file_exit_3(tmp_path):
    assert main(["run", "--input", str(tmp_path / "nope.csv"), "--schema", "numeric"]) == 3


def test_bad_cell_exit_3(tmp_path, capsys):
    path = _csv(tmp_path, "1,2\n3,abc\n")
    assert main(["run", "--input", path, "--schema", "numeric,numeric"]) == 3
    assert json.loads(capsys.readouterr().err)["details"]["row"] == 2


def test_empty_input_exit_3(tmp_path):
    path = _csv(tmp_path, "")
    assert main(["baseline", "--input", path, "--method", "dk"]) == 3


def test_degenerate_head_exit_4(tmp_path, capsys):
    path = _csv(tmp_path, "1,1\n1,1\n5,5\n9,0\n")
    assert main(["run", "--input", path, "--schema", "numeric,numeric", "--k", "1"]) == 4
    assert json.loads(capsys.readouterr().err)["error"] == "DegenerateLowerBoundError"


def test_baseline_dk_and_db(tmp_path, capsys):
    path = _csv(tmp_path, "0\n1\n2\n3\n10\n")
    assert main(["baseline", "--input", path, "--method", "dk", "--knn", "2", "--top-n", "2",
                 "--format", "csv"]) == 0
    assert capsys.readouterr().out == "index,score\n4,8.0\n0,2.0\n"
    assert main(["baseline", "--input", path, "--method", "db-nl", "--radius", "2.5",
                 "--fraction", "0.7"]) == 0
    assert json.loads(capsys.readouterr().out)["outliers"] == [4]


def test_baseline_knn_too_large(tmp_path, capsys):
    path = _csv(tmp_path, "0\n1\n2\n3\n10\n")
    assert main(["baseline", "--input", path, "--method", "dk", "--knn", "50"]) == 2
    assert "K" in json.loads(capsys.readouterr().err)["details"]


def test_bench_outputs(tmp_path):
    path = _csv(tmp_path, "".join(f"{i % 7},{i % 5}.5\n" for i in range(60)))
    summary, records, fig = tmp_path / "s.csv", tmp_path / "r.csv", tmp_path / "b.png"
    assert main(["bench", "--input", path, "--methods", "korm,dk,db-nl", "--reps", "2", "--num", "20",
                 "--output", str(summary), "--records", str(records), "--figure", str(fig)]) == 0
    rows = summary.read_text().splitlines()
    assert rows[0].startswith("method,dataset,n,reps")
    assert [r.split(",")[0] for r in rows[1:]] == ["korm", "dk", "db_nested_loop"]
    assert len(records.read_text().splitlines()) == 1 + 6
    assert fig.stat().st_size > 0


def test_bench_unknown_method(tmp_path):
    path = _csv(tmp_path, "1\n2\n3\n")
    assert main(["bench", "--input", path, "--methods", "korm,lof"]) == 2


def test_plotdata(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["run", *ABALONE, "--output", str(out)]) == 0
    fig = tmp_path / "roles.png"
    assert main(["plotdata", "--report", str(out), "--dims", "1,2", "--figure", str(fig)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == ",".join(rep.PLOT_FIELDS)
    assert fig.stat().st_size > 0
    assert main(["plotdata", "--report", str(out), "--dims", "x"]) == 2
    assert main(["plotdata", "--report", str(tmp_path / "missing.json")]) == 3


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "korm", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("korm ")


def test_console_script_report_is_reproducible(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        proc = subprocess.run([sys.executable, "-m", "korm", "run", *ABALONE, "--seed", "9",
                               "--output", str(path)], capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
    assert a.read_bytes() == b.read_bytes()
