import json

import numpy as np
import pytest

from smsim.config import RunConfig
from smsim.experiments import (
    RUNNERS,
    RunRecord,
    ablation_summary,
    constant_resolvent_gap,
    git_blob_hash,
    linear_fit,
    read_csv,
    run_experiment,
    write_csv,
)
from smsim.spectra import StabilityTable
from smsim.torus import GridSpec


def test_git_blob_hash_matches_git():
    # `printf hello | git hash-object --stdin`
    assert git_blob_hash(b"hello") == "b6fc4c620b67d95f953a5c1c1230aaab5db5a1b0"


def test_linear_fit_exact():
    slope, icpt, r2 = linear_fit([0, 1, 2, 3], [1, 3, 5, 7])
    assert (slope, icpt, r2) == pytest.approx((2, 1, 1))


def test_csv_round_trip(tmp_path):
    write_csv(tmp_path / "t.csv", {"seed": [1], "alpha": 0.9}, ["a", "b"], [[1, 0.1], [2, 1 / 3]])
    header, rows = read_csv(tmp_path / "t.csv")
    assert header == {"seed": [1], "alpha": 0.9}
    assert float(rows[1]["b"]) == 1 / 3


def test_constant_resolvent_gap_closed_form():
    assert constant_resolvent_gap(GridSpec(16), 2.0) == pytest.approx(1 / 6)


def test_ablation_summary_identity():
    c = [0.1, 0.2, 0.3]
    ren = StabilityTable([1, 0.5, 0.25], np.array([[1.0, 2.0], [1.1, 2.05], [1.12, 2.06]]), c)
    raw = StabilityTable(ren.eps, ren.eigenvalues + np.array(c)[:, None], [0.0] * 3)
    s = ablation_summary(ren, raw)
    assert s["identity_defect"] == pytest.approx(0.0, abs=1e-15)
    assert len(s["raw_drift"]) == 2


def _cfg(tmp_path, **kw):
    return RunConfig(out_dir=str(tmp_path), **kw)


def test_renorm_run_writes_provenance(tmp_path):
    cfg = _cfg(tmp_path, experiment="renorm", grid=64, eps_ladder=[0.25, 0.125, 0.0625], seeds=[1, 2])
    rec = run_experiment(cfg)
    assert rec.error is None and rec.passed
    out = tmp_path / f"renorm-{cfg.config_hash()}"
    header, rows = read_csv(out / "renorm.csv")
    for key in ("seeds", "grid", "alpha", "epsilon", "s", "m_calibrated", "calibration_id"):
        assert key in header
    assert header["fit"]["r2"] > 0.99
    assert len(rows) == 2 * 3 + 3
    report = json.loads((out / "renorm.json").read_text())
    assert "provenance" in report and "quoted_constant" in report["diagnostics"]
    stored = json.loads((out / "record.json").read_text())
    assert stored["output_hash"] == rec.output_hash


def test_determinism_same_config(tmp_path):
    cfg = _cfg(tmp_path / "a", experiment="renorm", grid=64, eps_ladder=[0.25, 0.125], seeds=[3])
    r1 = run_experiment(cfg)
    r2 = run_experiment(cfg.replace(out_dir=str(tmp_path / "b")))
    assert r1.config_hash == r2.config_hash
    assert r1.input_hash == r2.input_hash
    assert r1.output_hash == r2.output_hash


def test_errors_recorded(tmp_path):
    cfg = _cfg(tmp_path, experiment="domain", grid=16, epsilon=0.25,
               potential_snapshot=[str(tmp_path / "nope_A"), str(tmp_path / "nope_A2")])
    with pytest.raises(FileNotFoundError):
        run_experiment(cfg)  # the input hash reads the snapshot bytes first


def test_runtime_error_recorded(tmp_path, monkeypatch):
    def boom(cfg, out):
        raise RuntimeError("solver exploded")

    monkeypatch.setitem(RUNNERS, "gauge", boom)
    rec = run_experiment(_cfg(tmp_path, experiment="gauge", grid=16, epsilon=0.25))
    assert not rec.passed and "solver exploded" in rec.error
    assert isinstance(rec, RunRecord)


def test_unknown_experiment(tmp_path):
    with pytest.raises(ValueError):
        run_experiment(_cfg(tmp_path), "nonsense")


def test_spectrum_small_run(tmp_path):
    rec = run_experiment(_cfg(tmp_path, experiment="spectrum", grid=16, epsilon=0.25, M=12))
    names = {r["test"] for r in rec.results}
    assert {"hermiticity", "sandwich_lower", "flat_count_N100", "constant_potential_spectrum"} <= names
    assert rec.passed, rec.results


def test_gauge_small_run(tmp_path):
    rec = run_experiment(_cfg(tmp_path, experiment="gauge", grid=32, epsilon=0.125))
    assert rec.passed, rec.results


def test_domain_small_run_parallel(tmp_path):
    rec = run_experiment(_cfg(tmp_path, experiment="domain", grid=16, epsilon=0.25, seeds=[1, 2], workers=2))
    assert rec.passed, rec.results
