import json
import subprocess
import sys

import numpy as np
import pytest

from smsim.cli import main
from smsim.torus import read_snapshot


def test_list_defaults(capsys):
    assert main(["--list-defaults"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["b"] == 2 and d["nodes"] == 96 and d["mollifier"] == "heat"


def test_no_subcommand_is_usage_error(capsys):
    assert main([]) == 2


def test_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"alpha": 0.5}))
    assert main(["renorm", "--config", str(cfg)]) == 2
    assert "alpha" in capsys.readouterr().err
    assert main(["renorm", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["renorm", "--grid", "32", "--eps-ladder", "0.25", "0.03125"]) == 2


def test_renorm_pass_exit_zero(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 64, "alpha": 0.9, "seeds": [1]}))
    code = main(["renorm", "--config", str(cfg), "--out", str(tmp_path / "o"), "--eps-ladder", "0.25", "0.125", "0.0625"])
    out = capsys.readouterr().out
    assert code == 0
    assert "PASS" in out and "renorm_log_fit_r2" in out


def test_failing_battery_exit_one(tmp_path, capsys):
    # a two-point ladder admits no shrink factor, so the Cauchy battery cannot pass
    code = main(["ladder", "--grid", "16", "--eps-ladder", "1.0", "0.5", "--M", "3", "--out", str(tmp_path)])
    assert code == 1


def test_snapshot_then_domain(tmp_path, capsys):
    out = tmp_path / "snap"
    assert main(["snapshot", "--grid", "16", "--eps", "0.25", "--seeds", "4", "--out", str(out)]) == 0
    A = read_snapshot(out / "potential_A.tfld")
    A2 = read_snapshot(out / "potential_A2.tfld")
    assert A.components == 2 and A2.components == 1 and A.real
    code = main(["domain", "--grid", "16", "--snapshot", str(out / "potential_A.tfld"), str(out / "potential_A2.tfld"),
                 "--out", str(tmp_path / "res")])
    assert code == 0, capsys.readouterr().out
    report = json.loads(next((tmp_path / "res").glob("domain-*/domain.json")).read_text())
    assert report["provenance"]["potential_snapshot"][0].endswith("potential_A.tfld")
    assert all(r["pass"] for r in report["results"])


def test_snapshot_grid_mismatch(tmp_path, capsys):
    out = tmp_path / "snap"
    main(["snapshot", "--grid", "16", "--eps", "0.25", "--out", str(out)])
    code = main(["domain", "--grid", "32", "--snapshot", str(out / "potential_A.tfld"), str(out / "potential_A2.tfld"),
                 "--out", str(tmp_path / "res")])
    assert code == 1
    assert "grid" in capsys.readouterr().err


def test_console_script_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "smsim.cli", "--list-defaults"], capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["grid"] == 64
