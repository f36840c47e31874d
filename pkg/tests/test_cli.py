import json
import os
import subprocess
import sys

import pytest

from ranking_metrics.cli import main


def run(*args):
    return main([str(a) for a in args])


def test_rank_command(tmp_path, data_dir, capsys):
    code = run("rank", "--input", os.path.join(data_dir, "rank_returns.csv"),
               "--groups", os.path.join(data_dir, "rank_groups.csv"),
               "--metrics", "glr,omega", "--out", tmp_path)
    assert code == 0
    lines = (tmp_path / "leaderboard.csv").read_text().splitlines()
    assert "A,glr,2,1" in lines and "B,glr,0,2" in lines
    assert (tmp_path / "plot_glr.csv").exists()


def test_climate_command(tmp_path, data_dir):
    code = run("climate", "--input", os.path.join(data_dir, "climate_losses.csv"),
               "--zones", os.path.join(data_dir, "climate_zones.csv"), "--out", tmp_path)
    assert code == 0
    text = (tmp_path / "climate_leaderboard.csv").read_text()
    assert "North,ce:plinear:0.75q:0.1,0.954545454545,1" in text


def test_optimize_command_is_byte_deterministic(tmp_path, data_dir):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        code = run("optimize", "--input", os.path.join(data_dir, "opt_two_asset.csv"),
                   "--metric", "lvar:const:0.5", "--starts", 10, "--seed", 7, "--out", out)
        assert code == 0
        outs.append((out / "optimize_lvar_const_0.5.json").read_bytes())
    assert outs[0] == outs[1]
    doc = json.loads(outs[0])
    assert doc["weights"][1] == pytest.approx(1.0, abs=1e-3)
    assert doc["value"] == pytest.approx(0.05, abs=1e-6)


def test_verify_command(tmp_path):
    code = run("verify", "--seed", 1, "--trials", 150, "--out", tmp_path)
    assert code == 0
    rows = (tmp_path / "property_reports.csv").read_text().splitlines()
    assert rows[0].startswith("property,metric,trials,violations")
    assert json.loads((tmp_path / "counterexamples.json").read_text()) is not None


def test_verify_exit_code_on_violation(tmp_path, monkeypatch):
    import ranking_metrics.axioms as ax
    from ranking_metrics.cli import cmd_verify
    real = ax.builtin_metrics
    monkeypatch.setattr(ax, "builtin_metrics", lambda: real() + [ax.planted_violation_metric()])
    import argparse
    args = argparse.Namespace(seed=[1], trials=100, out=None)
    assert cmd_verify(args) == 2


@pytest.mark.parametrize("argv,needle", [
    (["rank", "--input", "nope.csv", "--groups", "g.csv", "--out", "o"], "nope.csv"),
    (["optimize", "--input", "x.csv", "--metric", "zzz", "--out", "o"], "x.csv"),
])
def test_invalid_inputs_exit_1(argv, needle, capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 1
    assert needle in capsys.readouterr().err


def test_bad_metric_key_exit_1(tmp_path, data_dir, capsys):
    code = run("rank", "--input", os.path.join(data_dir, "rank_returns.csv"),
               "--groups", os.path.join(data_dir, "rank_groups.csv"),
               "--metrics", "glr,sharpe", "--out", tmp_path)
    assert code == 1 and "sharpe" in capsys.readouterr().err


def test_usage_error_exit_1():
    with pytest.raises(SystemExit) as err:
        main(["verify", "--trials", "0"])
    assert err.value.code == 1


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "ranking_metrics", "verify", "--trials", "20"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert "holds_on_sample" in res.stdout
