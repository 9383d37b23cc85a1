"""End-to-end tests for the fracsob command line interface."""

import json
import os

import numpy as np
import pytest

from fracsob.cli import load_config, main
from fracsob.curves import write_samples
from fracsob.errors import ConfigError
from fracsob.spectral import grid


def circle_samples(n=64, radius=1.0):
    theta = grid(n)
    return radius * np.column_stack([np.cos(theta), np.sin(theta)])


@pytest.fixture
def workdir(tmp_path):
    curve = tmp_path / "curve.json"
    write_samples(curve, circle_samples())
    velocity = tmp_path / "velocity.json"
    write_samples(velocity, 0.3 * circle_samples())
    return tmp_path, curve, velocity


def test_exp_writes_all_artifacts(workdir, capsys):
    tmp, curve, velocity = workdir
    out = tmp / "out"
    rc = main(
        [
            "exp",
            "--curve", str(curve),
            "--velocity", str(velocity),
            "--steps", "64",
            "--T", "0.5",
            "--out", str(out),
        ]
    )
    assert rc == 0
    stdout = capsys.readouterr().out
    assert "integrated 64 steps to T = 0.5" in stdout
    for name in ("path.csv", "path.json", "path.svg", "path_conservation.json"):
        assert (out / name).exists(), name
    conservation = json.loads((out / "path_conservation.json").read_text())
    assert conservation["energy_drift"] < 1e-6
    assert conservation["flags"]["energy_drift_ok"]
    assert "seed" in conservation
    rows = (out / "path.csv").read_text().strip().split("\n")
    assert rows[0] == "t,k,x1,x2,v1,v2"


def test_exp_rejects_mismatched_velocity(workdir, capsys):
    tmp, curve, _ = workdir
    bad = tmp / "bad_velocity.json"
    write_samples(bad, 0.3 * circle_samples(n=32))
    rc = main(["exp", "--curve", str(curve), "--velocity", str(bad), "--out", str(tmp / "o")])
    assert rc == 1
    assert "velocity" in capsys.readouterr().err


def test_exp_rejects_degenerate_curves(tmp_path, capsys):
    theta = grid(64)
    flat = tmp_path / "flat.json"
    write_samples(flat, np.column_stack([np.cos(theta), np.zeros(64)]))
    velocity = tmp_path / "velocity.json"
    write_samples(velocity, 0.1 * circle_samples())
    rc = main(["exp", "--curve", str(flat), "--velocity", str(velocity), "--out", str(tmp_path / "o")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_match_converges_on_a_nearby_target(tmp_path, capsys):
    source = tmp_path / "source.json"
    write_samples(source, circle_samples(32))
    target = tmp_path / "target.json"
    write_samples(target, circle_samples(32, radius=1.05))
    out = tmp_path / "out"
    rc = main(
        [
            "match",
            "--source", str(source),
            "--target", str(target),
            "--K", "3",
            "--steps", "32",
            "--out", str(out),
        ]
    )
    assert rc == 0
    assert "shooting converged" in capsys.readouterr().out
    payload = json.loads((out / "match_result.json").read_text())
    assert payload["converged"] is True
    assert payload["iterations"] <= 50
    vel = np.asarray(payload["initial_velocity"])
    assert vel.shape == (32, 2)
    assert (out / "match_path.svg").exists()


def test_match_failure_still_writes_artifacts(tmp_path, capsys):
    source = tmp_path / "source.json"
    write_samples(source, circle_samples(32))
    ang = 0.5
    rot = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
    target = tmp_path / "target.json"
    write_samples(target, 1.2 * circle_samples(32) @ rot.T)
    out = tmp_path / "out"
    rc = main(
        [
            "match",
            "--source", str(source),
            "--target", str(target),
            "--K", "3",
            "--steps", "32",
            "--max-iter", "1",
            "--out", str(out),
        ]
    )
    assert rc == 2
    assert "did not converge" in capsys.readouterr().out
    payload = json.loads((out / "match_result.json").read_text())
    assert payload["converged"] is False


def test_check_passes_at_default_settings(tmp_path, capsys):
    report = tmp_path / "report.json"
    rc = main(["check", "--no-flow", "--json", str(report)])
    assert rc == 0
    stdout = capsys.readouterr().out
    assert "PASS" in stdout and "FAIL" not in stdout
    payload = json.loads(report.read_text())
    assert payload["ok"] is True
    assert payload["n"] == 256
    assert "spray_breakdown" not in payload  # only kept under --dump-spray


def test_check_exposes_spray_terms_on_request(tmp_path):
    report = tmp_path / "report.json"
    rc = main(["check", "--no-flow", "--dump-spray", "--json", str(report)])
    assert rc == 0
    payload = json.loads(report.read_text())
    assert "term_w_w0" in payload["spray_breakdown"]


def test_check_honors_an_explicit_grid_and_reports_failures(tmp_path, capsys):
    # the operator identities genuinely miss their tolerances on a coarse grid,
    # which must surface as exit code 3, not as a crash
    report = tmp_path / "report.json"
    rc = main(["check", "--no-flow", "--N", "64", "--json", str(report)])
    assert rc == 3
    payload = json.loads(report.read_text())
    assert payload["n"] == 64
    assert any(entry["passed"] is False for entry in payload["checks"])


def test_check_flags_an_inadmissible_family(capsys):
    rc = main(
        ["check", "--no-flow", "--family", "two_term_fractional", "--r", "1.2",
         "--alphas", "0", "1"]
    )
    assert rc == 3
    assert "metric_admissible" in capsys.readouterr().out


def test_symbols_dumps_a_table(tmp_path, capsys):
    out = tmp_path / "symbols.json"
    rc = main(["symbols", "--family", "bessel_fractional", "--r", "1.5",
               "--m-max", "64", "--modes", "4", "--json", str(out)])
    assert rc == 0
    payload = json.loads(out.read_text())
    assert payload["class_report"]["family"] == "bessel_fractional"
    assert payload["class_report"]["elliptic"] is True
    lam0 = next(iter(payload["table"]))
    assert len(payload["table"][lam0]["values"]) == 9


def test_config_file_drives_the_run(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"metric": {"family": "constant_coefficient",
                                             "alphas": [1.0, 1.0]}}))
    cfg = load_config(str(config), {})
    assert cfg.symbol.family == "constant_coefficient"
    assert cfg.solver["steps"] == 200  # untouched blocks keep their defaults


def test_metric_block_does_not_inherit_partial_defaults(tmp_path):
    # naming a family without its required order must fail loudly instead of
    # silently borrowing r from the built-in default metric
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"metric": {"family": "bessel_fractional"}}))
    with pytest.raises(ConfigError, match="metric.r"):
        load_config(str(config), {})


def test_custom_table_is_an_api_only_family(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"metric": {"family": "custom_table"}}))
    with pytest.raises(ConfigError):
        load_config(str(config), {})


def test_seed_env_override(monkeypatch):
    monkeypatch.setenv("FRACSOB_SEED", "417")
    cfg = load_config(None, {})
    assert cfg.seed == 417


def test_unreadable_config_is_a_config_error(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    rc = main(["check", "--config", str(missing)])
    assert rc == 1
    assert "error:" in capsys.readouterr().err
