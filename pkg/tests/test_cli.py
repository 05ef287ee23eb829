"""End-to-end runs of the command-line interface."""

import json

import pytest
from click.testing import CliRunner

from moranset.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def _run(runner, args):
    result = runner.invoke(main, args, catch_exceptions=False)
    return result


def test_validate_ok(runner):
    res = _run(runner, ["validate", "--preset", "cantor3", "--depth", "5"])
    assert res.exit_code == 0
    report = json.loads(res.output)
    assert report["ok"] is True
    assert len(report["levels"]) == 5


def test_validate_fail_exit_code(runner, tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({
        "n": {"kind": "constant", "values": [3]},
        "c": {"kind": "constant", "values": ["1/2"]},
        "L": {"kind": "constant", "values": ["0"]},
        "R": {"kind": "constant", "values": ["0"]},
        "gaps": {"kind": "uniform"}}))
    res = _run(runner, ["validate", "--config", str(cfg), "--depth", "3"])
    assert res.exit_code == 5
    assert json.loads(res.output)["ok"] is False


def test_spec_source_is_exclusive(runner, tmp_path):
    res = runner.invoke(main, ["validate"])
    assert res.exit_code == 3
    cfg = tmp_path / "c.json"
    cfg.write_text("{}")
    res = runner.invoke(main, ["validate", "--preset", "cantor3",
                               "--config", str(cfg)])
    assert res.exit_code == 3


def test_unknown_preset_exit_code(runner):
    res = runner.invoke(main, ["build", "--preset", "nope"])
    assert res.exit_code == 3


def test_budget_exit_code(runner, tmp_path):
    res = runner.invoke(main, ["build", "--preset", "wide10", "--depth", "9",
                               "--out", str(tmp_path), "--budget", "1000"])
    assert res.exit_code == 7


def test_build_artifacts(runner, tmp_path):
    res = _run(runner, ["build", "--preset", "cantor3", "--depth", "4",
                        "--out", str(tmp_path)])
    assert res.exit_code == 0
    lines = (tmp_path / "intervals.jsonl").read_text().splitlines()
    assert len(lines) == 16
    first = json.loads(lines[0])
    assert first["lo"] == "0/1" and first["hi"] == "1/81"
    rows = (tmp_path / "levels.csv").read_text().splitlines()
    assert rows[0].startswith("k,N_k,delta_k")
    assert rows[1].split(",")[:3] == ["1", "2", "1/3"]
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "build"
    assert "config_sha256" in manifest


def test_dim_and_conditions(runner, tmp_path):
    res = _run(runner, ["dim", "--preset", "cantor3", "--depth", "10",
                        "--t", "0.7", "--out", str(tmp_path)])
    assert res.exit_code == 0
    assert "s_10 = 0.6309297536" in res.output
    assert (tmp_path / "dim.csv").exists()
    assert (tmp_path / "cover.csv").exists()
    res = _run(runner, ["conditions", "--preset", "cantor3", "--depth", "6",
                        "--out", str(tmp_path)])
    cert = json.loads((tmp_path / "conditions.json").read_text())
    assert cert["omega1"] == "1/1"
    assert cert["omega3"] == "2/3"
    assert cert["applicable"]["A"] is True


def test_reconstruct_and_branches(runner, tmp_path):
    res = _run(runner, ["reconstruct", "--preset", "padded2", "--depth", "4",
                        "--out", str(tmp_path)])
    assert res.exit_code == 0
    rows = (tmp_path / "star.csv").read_text().splitlines()
    assert rows[1].split(",")[1] == "15/64"
    res = _run(runner, ["branches", "--preset", "wide10", "--depth", "3",
                        "--mode", "explicit", "--out", str(tmp_path)])
    assert res.exit_code == 0
    assert "M = 3" in res.output
    sched = (tmp_path / "schedule.csv").read_text().splitlines()
    assert sched[1] == "1,2,2,3"
    assert (tmp_path / "branch_stats.csv").exists()
    branches = (tmp_path / "branches.jsonl").read_text().splitlines()
    assert json.loads(branches[0])["m"] == 1


def test_measure_audit_pass_and_regime(runner, tmp_path):
    res = _run(runner, ["measure-audit", "--preset", "cantor3", "--t", "0.6",
                        "--k-hi", "3", "--out", str(tmp_path)])
    assert res.exit_code == 0
    assert res.output.startswith("PASS")
    audit = json.loads((tmp_path / "audit.json").read_text())
    assert audit["t"] == 0.6
    res = runner.invoke(main, ["measure-audit", "--preset", "cantor3",
                               "--t", "0.95", "--out", str(tmp_path)])
    assert res.exit_code == 11


def test_qs_and_report(runner, tmp_path):
    res = _run(runner, ["qs", "--preset", "cantor3", "--map", "power:2",
                        "--d", "0.5", "--depth", "5", "--out", str(tmp_path)])
    assert res.exit_code == 0
    summary = json.loads((tmp_path / "qs.json").read_text())
    assert summary["map"].startswith("power")
    assert summary["sandwich"]["q"] <= 2.1
    assert (tmp_path / "stats.csv").exists()
    assert (tmp_path / "ratio.csv").exists()
    res = _run(runner, ["report", "--preset", "cantor3", "--depth", "6",
                        "--out", str(tmp_path)])
    assert res.exit_code == 0
    bundle = json.loads((tmp_path / "report.json").read_text())
    assert bundle["refinement_length_bound_ok"] is True
    for row in bundle["branch_length_identity"]:
        assert row["l_Tmk"] == row["expected"]


def test_rerun_byte_identical(runner, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        res = _run(runner, ["build", "--preset", "skew10", "--depth", "3",
                            "--out", str(out)])
        assert res.exit_code == 0
    for name in ("intervals.jsonl", "levels.csv", "manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_sampled_audit_thread_independent(runner, tmp_path):
    outs = []
    for threads, sub in (("1", "t1"), ("4", "t4")):
        out = tmp_path / sub
        res = _run(runner, ["measure-audit", "--preset", "cantor3",
                            "--t", "0.6", "--k-lo", "2", "--k-hi", "4",
                            "--mode", "sampled", "--samples", "200",
                            "--seed", "9", "--threads", threads,
                            "--out", str(out)])
        assert res.exit_code == 0
        data = json.loads((out / "audit.json").read_text())
        data.pop("mode", None)
        outs.append(data)
    assert outs[0] == outs[1]
