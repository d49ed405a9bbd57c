import json
import os

import numpy as np
import pytest

from groupsample.cli import (
    ConfigError,
    ExperimentConfig,
    parse_config,
    version_hash,
    run_experiment,
    main,
)


def _write(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_parse_config_basic(tmp_path):
    path = _write(
        tmp_path,
        "# comment\nexperiment = shannon\nseed = 3\nr = 1.5  # inline\ntol_bounds = 1e-2\n",
    )
    cfg = parse_config(path)
    assert cfg.experiment == "shannon"
    assert cfg.seed == 3
    assert cfg.r == 1.5
    assert cfg.tol("tol_bounds", 0.0) == 1e-2


def test_parse_config_rejects_unknown_key(tmp_path):
    path = _write(tmp_path, "experiment = shannon\nbogus = 1\n")
    with pytest.raises(ConfigError, match="unknown config key"):
        parse_config(path)


def test_parse_config_rejects_negative_radius(tmp_path):
    path = _write(tmp_path, "experiment = shannon\nr = -2\n")
    with pytest.raises(ConfigError, match="must be positive"):
        parse_config(path)


def test_parse_config_rejects_unknown_experiment(tmp_path):
    path = _write(tmp_path, "experiment = nope\n")
    with pytest.raises(ConfigError, match="unknown experiment"):
        parse_config(path)


def test_parse_config_requires_experiment(tmp_path):
    path = _write(tmp_path, "seed = 1\n")
    with pytest.raises(ConfigError):
        parse_config(path)


def test_parse_config_overrides(tmp_path):
    path = _write(tmp_path, "experiment = shannon\nseed = 1\n")
    cfg = parse_config(path, overrides=["seed=9", "omega = 2.0"])
    assert cfg.seed == 9
    assert cfg.omega == 2.0


def test_version_hash_stable():
    assert version_hash() == version_hash()
    assert len(version_hash()) == 16


def test_run_negative_radius_no_partial_output(tmp_path):
    out = tmp_path / "out"
    path = _write(tmp_path, f"experiment = shannon\nr = -1\noutdir = {out}\n")
    assert main(["run", path]) == 2
    assert not out.exists()


def test_usage_error_exit_code(tmp_path):
    with pytest.raises(SystemExit) as e:
        main(["sweep", "nothing.cfg", "--param", "bad", "--values", "1"])
    assert e.value.code == 2


def test_missing_config_exit_code():
    assert main(["run", "/nonexistent/exp.cfg"]) == 2


def test_run_quasilattice_outputs(tmp_path):
    out = tmp_path / "out"
    path = _write(tmp_path, f"experiment = quasilattice\nmodel = rn:2\noutdir = {out}\n")
    assert main(["run", path]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["experiment"] == "quasilattice"
    assert report["config"]["model"] == "rn:2"
    assert report["version"] == version_hash()
    assert "wall_time_s" in report and "cache" in report
    names = [c["name"] for c in report["checks"]]
    assert names.count("exact-tiling") == 1
    assert all(c["verdict"] in ("pass", "fail", "hypothesis-not-met") for c in report["checks"])
    assert (out / "table.csv").exists()
    assert (out / "points.csv").exists()


def test_run_twice_byte_identical_csv(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    p1 = _write(tmp_path, f"experiment = quasilattice\nmodel = rn:2\noutdir = {out1}\n", "a.cfg")
    p2 = _write(tmp_path, f"experiment = quasilattice\nmodel = rn:2\noutdir = {out2}\n", "b.cfg")
    assert main(["run", p1]) == 0
    assert main(["run", p2]) == 0
    assert (out1 / "table.csv").read_bytes() == (out2 / "table.csv").read_bytes()
    assert (out1 / "points.csv").read_bytes() == (out2 / "points.csv").read_bytes()


def test_verify_subcommand(tmp_path):
    pts = np.arange(0.0, 10.0, 1.0)[:, None]
    csv = tmp_path / "pts.csv"
    np.savetxt(csv, pts, delimiter=",", header="x0", comments="")
    out = tmp_path / "out"
    rc = main(["verify", str(csv), "--model", "r1", "--sep", "0.4", "--dense", "0.6",
               "--outdir", str(out)])
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert {c["name"] for c in report["checks"]} == {"separated", "dense"}
    # a failing certificate flips the exit code
    rc = main(["verify", str(csv), "--model", "r1", "--dense", "0.3",
               "--outdir", str(out)])
    assert rc == 1


def test_verify_requires_a_check(tmp_path):
    pts = np.arange(0.0, 4.0, 1.0)[:, None]
    csv = tmp_path / "pts.csv"
    np.savetxt(csv, pts, delimiter=",", header="x0", comments="")
    assert main(["verify", str(csv), "--outdir", str(tmp_path / "o")]) == 2


def test_sweep_shannon_tightness_trend(tmp_path):
    out = tmp_path / "out"
    path = _write(tmp_path, f"experiment = shannon\noutdir = {out}\n")
    rc = main(["sweep", path, "--param", "r", "--values", "2.0", "1.0", "0.5"])
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert report["sweep"]["param"] == "r"
    names = [c["name"] for c in report["checks"]]
    assert "tightness-nonincreasing" in names
    rows = (out / "table.csv").read_text().strip().splitlines()
    assert len(rows) == 4  # header + one per value


def test_experiment_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="shannon", resolution=1).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="shannon", model="nope").validate()
    cfg = ExperimentConfig(experiment="oscillation", model="r1").validate()
    echo = cfg.echo()
    assert echo["experiment"] == "oscillation"
    assert "resolution" not in echo  # unset keys stay out of the echo


def test_run_experiment_reports_every_check_once(tmp_path):
    cfg = ExperimentConfig(experiment="beurling-scan", outdir=str(tmp_path)).validate()
    report, header, rows, ps = run_experiment(cfg)
    names = [c["name"] for c in report["checks"]]
    assert len(names) == len(set(names))
    assert len(rows) == 5
