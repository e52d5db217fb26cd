import json
import os

import numpy as np
import pytest

from curvematch.cli import load_config, main, resolve_config


def fast_config(tmp_path, **overrides):
    doc = {
        "scenario": "contract",
        "out_dir": str(tmp_path / "run"),
        "seed": 7,
        "mesh": {"h": 1.5, "segments": 24},
        "target": {"steps": 4},
        "inversion": {"steps": 3},
        "raster": {"nx": 32, "ny": 32},
        "eki": {"ensemble_size": 4, "max_iter": 1},
    }
    doc.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return path, doc


def test_resolve_config_defaults():
    cfg = resolve_config({})
    assert cfg["mesh"]["segments"] == 48
    assert cfg["target"]["alpha"] == 0.5
    assert cfg["target"]["steps"] == 15
    assert cfg["inversion"]["alpha"] == 1.0
    assert cfg["inversion"]["steps"] == 10
    assert cfg["raster"]["nx"] == 128
    assert cfg["raster"]["half_width"] == cfg["mesh"]["half_width"]
    assert cfg["eki"]["ensemble_size"] == 20


def test_unknown_keys_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"scenari": "contract"}))
    assert main(["make-target", "--config", str(path)]) == 2

    path.write_text(json.dumps({"eki": {"ensemble": 4}}))
    assert main(["make-target", "--config", str(path)]) == 2


def test_config_not_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("not json {")
    assert main(["invert", "--config", str(path)]) == 2


def test_missing_scenario_is_usage_error(tmp_path):
    path, _ = fast_config(tmp_path, scenario=None)
    assert main(["make-target", "--config", str(path)]) == 2


def test_mesh_gen_artifacts(tmp_path):
    out = tmp_path / "mesh"
    assert main(["mesh-gen", "--out", str(out)]) == 0
    for name in ("config_resolved.json", "template_curve.csv", "mesh_vertices.csv", "mesh_cells.csv"):
        assert (out / name).exists()
    with open(out / "template_curve.csv") as fh:
        assert fh.readline().strip() == "vertex,x,y"


def test_make_target_forward_invert_report(tmp_path, capsys):
    path, doc = fast_config(tmp_path)
    run = doc["out_dir"]

    assert main(["make-target", "--config", str(path)]) == 0
    for name in (
        "config_resolved.json",
        "template_curve.csv",
        "target_curve.csv",
        "true_momentum.csv",
        "target_raster.bin",
        "target_raster.json",
    ):
        assert os.path.exists(os.path.join(run, name))

    # the contract flow shrinks the curve, so the target raster holds less
    # mass than the template polygon encloses
    from curvematch.raster import area, read_raster

    target = read_raster(os.path.join(run, "target_raster"))
    template = np.loadtxt(os.path.join(run, "template_curve.csv"), delimiter=",", skiprows=1)
    tx, ty = template[:, 1], template[:, 2]
    template_area = 0.5 * abs(np.dot(tx, np.roll(ty, -1)) - np.dot(ty, np.roll(tx, -1)))
    assert area(target) < template_area

    assert main(["invert", "--config", str(path)]) == 0
    for name in ("diagnostics.csv", "ensemble_final.csv", "mean_momentum.csv", "timings.txt"):
        assert os.path.exists(os.path.join(run, name))
    with open(os.path.join(run, "diagnostics.csv")) as fh:
        lines = fh.read().strip().splitlines()
    assert lines[0] == "iteration,E,R,S"
    assert len(lines) == 3  # header + max_iter+1 rows
    capsys.readouterr()

    assert main(["report", run]) == 0
    text = capsys.readouterr().out
    assert "iterations recorded: 2" in text

    fwd = str(tmp_path / "fwd")
    assert (
        main(
            [
                "forward",
                "--config",
                str(path),
                "--out",
                fwd,
                "--momentum",
                os.path.join(run, "true_momentum.csv"),
            ]
        )
        == 0
    )
    trajs = sorted(f for f in os.listdir(fwd) if f.startswith("trajectory_"))
    assert len(trajs) == doc["target"]["steps"] + 1
    final = np.loadtxt(os.path.join(fwd, trajs[-1]), delimiter=",", skiprows=1)
    target_curve = np.loadtxt(os.path.join(run, "target_curve.csv"), delimiter=",", skiprows=1)
    assert np.allclose(final, target_curve, atol=1e-12)


def test_invert_requires_target(tmp_path):
    path, _ = fast_config(tmp_path)
    assert main(["invert", "--config", str(path)]) == 2


def test_rerun_from_resolved_config_is_byte_identical(tmp_path):
    path, doc = fast_config(tmp_path)
    run = doc["out_dir"]
    assert main(["make-target", "--config", str(path)]) == 0
    assert main(["invert", "--config", str(path)]) == 0

    def snap():
        out = {}
        for name in sorted(os.listdir(run)):
            if name.endswith(".csv"):
                with open(os.path.join(run, name), "rb") as fh:
                    out[name] = fh.read()
        return out

    before = snap()
    resolved = os.path.join(run, "config_resolved.json")
    assert main(["make-target", "--config", resolved]) == 0
    assert main(["invert", "--config", resolved]) == 0
    after = snap()
    assert before.keys() == after.keys()
    for name in before:
        assert before[name] == after[name], name


def test_seed_changes_initial_spread(tmp_path):
    path, doc = fast_config(tmp_path, eki={"ensemble_size": 4, "max_iter": 0})
    run = doc["out_dir"]
    assert main(["make-target", "--config", str(path)]) == 0
    assert main(["invert", "--config", str(path)]) == 0
    with open(os.path.join(run, "diagnostics.csv")) as fh:
        rows_a = fh.read().strip().splitlines()
    assert len(rows_a) == 2  # max_iter=0 still evaluates once

    assert main(["invert", "--config", str(path), "--seed", "8"]) == 0
    with open(os.path.join(run, "diagnostics.csv")) as fh:
        rows_b = fh.read().strip().splitlines()
    s_a = float(rows_a[1].split(",")[3])
    s_b = float(rows_b[1].split(",")[3])
    assert s_a != s_b


def test_forward_validates_momentum_count(tmp_path):
    path, doc = fast_config(tmp_path)
    bad = tmp_path / "bad_momentum.csv"
    with open(bad, "w") as fh:
        fh.write("facet,p\n")
        for i in range(10):
            fh.write(f"{i},1.0\n")
    out = str(tmp_path / "fwd")
    assert main(["forward", "--config", str(path), "--out", out, "--momentum", str(bad)]) == 2
    assert not os.path.exists(os.path.join(out, "trajectory_000.csv"))


def test_forward_zero_momentum_keeps_template(tmp_path):
    path, doc = fast_config(tmp_path)
    zeros = tmp_path / "zeros.csv"
    with open(zeros, "w") as fh:
        fh.write("facet,p\n")
        for i in range(doc["mesh"]["segments"]):
            fh.write(f"{i},0.0\n")
    out = str(tmp_path / "fwd0")
    assert main(["forward", "--config", str(path), "--out", out, "--momentum", str(zeros)]) == 0
    first = np.loadtxt(os.path.join(out, "trajectory_000.csv"), delimiter=",", skiprows=1)
    last = np.loadtxt(os.path.join(out, f"trajectory_{doc['target']['steps']:03d}.csv"), delimiter=",", skiprows=1)
    assert np.array_equal(first, last)


def test_jobs_flag_matches_sequential(tmp_path):
    path, doc = fast_config(tmp_path, eki={"ensemble_size": 3, "max_iter": 1})
    run = doc["out_dir"]
    assert main(["make-target", "--config", str(path)]) == 0
    assert main(["invert", "--config", str(path)]) == 0
    with open(os.path.join(run, "diagnostics.csv"), "rb") as fh:
        seq = fh.read()
    assert main(["invert", "--config", str(path), "--jobs", "2"]) == 0
    with open(os.path.join(run, "diagnostics.csv"), "rb") as fh:
        par = fh.read()
    assert seq == par


def test_report_without_run_dir(tmp_path):
    assert main(["report", str(tmp_path / "nope")]) == 2


def test_load_config_default_when_missing():
    cfg = load_config(None)
    assert cfg["seed"] == 0
    assert cfg["out_dir"] == "run"


def test_unknown_scenario_name(tmp_path):
    path, _ = fast_config(tmp_path, scenario="shrink")
    assert main(["make-target", "--config", str(path)]) == 2
