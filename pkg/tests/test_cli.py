import csv
import subprocess
import sys

import pytest

from roadimp import cli

NAIVE_B = {1: 0.0861, 2: 0.0861, 3: 0.0577, 4: 0.1155, 5: 0.0284, 6: 0.0577,
           7: 0.0577, 8: 0.0577, 9: 0.0861, 10: 0.0577, 11: 0.1439, 12: 0.2016}


def rows(text):
    return list(csv.DictReader(l for l in text.splitlines() if not l.startswith("#")))


def test_structural_csv_matches_naive_column(capsys):
    assert cli.main(["structural", "--mode", "paper-naive", "--format", "csv"]) == 0
    got = {int(r["segment_id"]): float(r["birnbaum"]) for r in rows(capsys.readouterr().out)}
    assert got == pytest.approx(NAIVE_B, abs=1e-4)


def test_structural_does_not_touch_simulator(monkeypatch, capsys):
    from roadimp.sim import kernel

    def boom(*a, **k):
        raise AssertionError("simulator called")

    monkeypatch.setattr(kernel, "run_segment", boom)
    assert cli.main(["structural", "--measure", "barlow-proschan"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("mode: exact")
    assert "ranking (barlow-proschan): 12 11" in out


def test_structural_to_directory(tmp_path, capsys):
    assert cli.main(["--out", str(tmp_path), "structural", "--format", "csv"]) == 0
    assert (tmp_path / "structural.csv").exists()


def test_validate(capsys):
    assert cli.main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "segments: 12" in out and out.rstrip().endswith("ok")


def test_validate_bad_file(tmp_path, capsys):
    f = tmp_path / "bad.yaml"
    f.write_text("schema: 1\nname: x\nsegments: []\nroutes: []\n")
    assert cli.main(["--scenario", str(f), "validate"]) == 1
    assert "bad.yaml:3: segments: at least one segment" in capsys.readouterr().err


def test_usage_errors_exit_one(capsys):
    assert cli.main(["sweep", "--bogus"]) == 1
    assert cli.main([]) == 1
    assert cli.main(["sweep", "--intensities", "0.5:0.1:0.1"]) == 1
    assert cli.main(["simulate", "--segment", "99", "--intensity", "0.1"]) == 1


def test_runtime_error_exit_two(monkeypatch, capsys):
    def boom(*a, **k):
        raise RuntimeError("disk on fire")

    monkeypatch.setattr("roadimp.pipeline.run_sweep", boom)
    assert cli.main(["sweep", "--replications", "1"]) == 2
    assert "disk on fire" in capsys.readouterr().err


def test_simulate_with_trajectory(tmp_path, capsys):
    traj = tmp_path / "t.csv"
    args = ["simulate", "--segment", "5", "--intensity", "0.2", "--steps", "300", "--warmup", "50",
            "--trajectory", str(traj)]
    assert cli.main(args) == 0
    out = capsys.readouterr().out
    assert "segment: 5 Nyska 1" in out and "overlaps: 0" in out
    lines = traj.read_text().splitlines()
    assert lines[0] == "step,vehicle,position,velocity" and len(lines) > 100
    assert cli.main(args[:-2] + ["--backend", "python"]) == 0
    assert capsys.readouterr().out == out


def test_sweep_writes_reproducible_files(tmp_path, capsys):
    base = ["sweep", "--replications", "2", "--intensities", "0.05:0.1:0.05", "--seed", "9"]
    assert cli.main(["--out", str(tmp_path / "a"), *base]) == 0
    assert cli.main(["--out", str(tmp_path / "b"), *base]) == 0
    for name in ("importance.csv", "delays.csv", "reliability.csv", "summary.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rel = rows((tmp_path / "a" / "reliability.csv").read_text())
    assert [r["intensity"] for r in rel] == ["0.05"] * 5 + ["0.1"] * 5
    assert "# seed: 9" in (tmp_path / "a" / "delays.csv").read_text()


def test_grid_parser():
    assert cli._grid("0.05:0.15:0.05") == (0.05, 0.1, 0.15)
    assert cli._grid("0.2,0.4") == (0.2, 0.4)


def test_console_script_entry():
    out = subprocess.run([sys.executable, "-m", "roadimp.cli", "validate"], capture_output=True, text=True)
    assert out.returncode == 0 and "ok" in out.stdout
