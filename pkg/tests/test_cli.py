import filecmp
import subprocess
import sys

import numpy as np
import pytest

from gaitablate.cli import main
from gaitablate.mocap import load_dataset


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["--out-dir", str(root / "pre"), "--seed", "2", "synth", "--subjects", "4", "--samples", "4"]) == 0
    return root


def test_synth_deterministic(tmp_path, data):
    assert main(["--out-dir", str(tmp_path / "again"), "--seed", "2", "synth", "--subjects", "4", "--samples", "4"]) == 0
    cmp = filecmp.dircmp(data / "pre" / "markers", tmp_path / "again" / "markers")
    assert not cmp.diff_files and len(cmp.same_files) == 16


def test_ingest_and_keep_going(tmp_path, capsys):
    raw = tmp_path / "raw"
    assert main(["--out-dir", str(raw), "synth", "--raw", "--subjects", "2", "--samples", "2"]) == 0
    assert main(["--data-root", str(raw), "--out-dir", str(tmp_path / "pre"), "ingest"]) == 0
    out = capsys.readouterr().out
    assert "S01/01: frames [" in out
    assert len(list((tmp_path / "pre" / "markers").glob("*.csv"))) == 4
    (raw / "raw" / "S02__01.csv").write_text("frame,broken\n")
    assert main(["--data-root", str(raw), "--out-dir", str(tmp_path / "p2"), "ingest"]) == 1
    assert main(["--data-root", str(raw), "--out-dir", str(tmp_path / "p2"), "ingest", "--keep-going"]) == 0
    assert "raw/S02__01.csv" in capsys.readouterr().out


def test_missing_layout_is_usage_error(tmp_path, data):
    assert main(["--data-root", str(data / "pre"), "--layout", str(tmp_path / "none.json"), "ingest"]) == 2
    assert main(["ingest"]) == 2


def test_perturb_macro(tmp_path, data):
    assert main(["--data-root", str(data / "pre"), "--out-dir", str(tmp_path / "m"),
                 "perturb", "--pipeline", "coarsen-macro step=1000"]) == 0
    ds = load_dataset(tmp_path / "m")
    for s in ds.samples():
        assert (np.mod(s.frames, 1000) == 0).all()


def test_perturb_identity_bytewise(tmp_path, data):
    assert main(["--data-root", str(data / "pre"), "--out-dir", str(tmp_path / "i"),
                 "perturb", "--pipeline", "identity"]) == 0
    cmp = filecmp.dircmp(data / "pre" / "markers", tmp_path / "i" / "markers")
    assert not cmp.diff_files and len(cmp.same_files) == 16
    assert (data / "pre" / "metadata.csv").read_bytes() == (tmp_path / "i" / "metadata.csv").read_bytes()


def test_perturb_invalid_composition(tmp_path, data, capsys):
    (tmp_path / "p.txt").write_text("static-pose mode=average\nmotion-extraction\n")
    code = main(["--data-root", str(data / "pre"), "--out-dir", str(tmp_path / "x"),
                 "perturb", "--pipeline-file", str(tmp_path / "p.txt")])
    assert code == 2
    assert "step 1" in capsys.readouterr().err


SUITE = """
defaults:
  repetitions: 2
  learner: {C_values: [1.0, 100.0], gamma_factors: [1.0], folds: 3}
conditions:
  - {name: clear, task: identity, pipeline: identity}
  - {name: micro, task: sex, pipeline: coarsen-micro modulus=1}
"""


def test_run_and_report(tmp_path, data, capsys):
    (tmp_path / "s.yaml").write_text(SUITE)
    args = ["--data-root", str(data / "pre"), "--threads", "2"]
    assert main(args + ["--out-dir", str(tmp_path / "a"), "run", "--suite", str(tmp_path / "s.yaml")]) == 0
    table = capsys.readouterr().out
    assert "clear" in table and "micro" in table
    assert main(args + ["--out-dir", str(tmp_path / "b"), "run", "--suite", str(tmp_path / "s.yaml")]) == 0
    assert (tmp_path / "a" / "combined.csv").read_bytes() == (tmp_path / "b" / "combined.csv").read_bytes()
    assert (tmp_path / "a" / "combined.csv").read_text().count("\n") == 1 + 4
    assert main(["--out-dir", str(tmp_path / "a"), "report"]) == 0
    assert "clear" in capsys.readouterr().out
    assert main(["--out-dir", str(tmp_path / "nothing"), "report"]) == 2


def test_run_unknown_operator(tmp_path, data, capsys):
    (tmp_path / "bad.yaml").write_text("conditions:\n  - {name: oops, pipeline: levitate}\n")
    assert main(["--data-root", str(data / "pre"), "run", "--suite", str(tmp_path / "bad.yaml")]) == 2
    assert "oops" in capsys.readouterr().err


def test_run_failure_exit_code(tmp_path, capsys):
    # 3 subjects = 2 F + 1 M: the sex condition fails, the identity one still runs
    root = tmp_path / "d"
    assert main(["--out-dir", str(root), "synth", "--subjects", "3", "--samples", "3"]) == 0
    (tmp_path / "s.yaml").write_text(
        "defaults: {repetitions: 1, learner: {C_values: [1.0], gamma_factors: [1.0], folds: 2}}\n"
        "conditions:\n  - {name: sexcond, task: sex, pipeline: identity}\n"
        "  - {name: idcond, task: identity, pipeline: identity}\n")
    assert main(["--data-root", str(root), "--out-dir", str(tmp_path / "o"),
                 "run", "--suite", str(tmp_path / "s.yaml")]) == 1
    assert (tmp_path / "o" / "results" / "idcond.json").exists()
    assert "FAILED" in capsys.readouterr().out


def test_empty_suite_succeeds(tmp_path, data):
    (tmp_path / "e.yaml").write_text("conditions: []\n")
    assert main(["--data-root", str(data / "pre"), "--out-dir", str(tmp_path / "o"),
                 "run", "--suite", str(tmp_path / "e.yaml")]) == 0
    assert (tmp_path / "o" / "combined.csv").exists()


def test_export_pld(tmp_path, data):
    out = tmp_path / "p.csv"
    assert main(["--data-root", str(data / "pre"), "export-pld", "--sample", "S01/01", "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "frame,marker,u,v" and len(lines) == 1 + 100 * 62
    assert main(["--data-root", str(data / "pre"), "export-pld", "--sample", "S99/01", "--output", str(out)]) == 2


def test_threads_must_be_positive(data):
    assert main(["--threads", "0", "--data-root", str(data / "pre"), "report"]) == 2


def test_env_override(tmp_path, data, monkeypatch):
    monkeypatch.setenv("GAITABLATE_DATA_ROOT", str(data / "pre"))
    monkeypatch.setenv("GAITABLATE_OUT_DIR", str(tmp_path / "envout"))
    assert main(["export-pld", "--sample", "S02/03"]) == 0
    assert (tmp_path / "envout" / "pld_S02_03.csv").exists()


def test_bad_flag_is_usage_error():
    assert main(["frobnicate"]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "gaitablate.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "export-pld" in proc.stdout
