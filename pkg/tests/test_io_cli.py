"""Tests for run-configuration files, on-disk formats, and the CLI."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from spheresync import catalog, cli, dynamics, geometry, io


def base_doc(**model):
    doc = {"schema": io.SCHEMA_RUN, "model": {"d": 3, "n": 5}}
    doc["model"].update(model)
    return doc


def full_doc():
    return {
        "schema": io.SCHEMA_RUN,
        "model": {"d": 3, "n": 6, "kappa2": 0.4, "kappa_dbody": 1.2},
        "integration": {
            "t_max": 12.0,
            "dt": 0.02,
            "steady_tol": 1e-8,
            "sample_stride": 5,
            "checkpoint_stride": 10,
        },
        "frequencies": {"kind": "random", "magnitude": 0.3, "seed": 11},
        "initial": {"kind": "catalog", "family": "d3_ring", "jitter": 1e-3, "jitter_seed": 4},
        "output": {"summary": "out.json"},
    }


# ---------------------------------------------------------------------------
# Parsing and validation


def test_parse_minimal_config_fills_defaults():
    cfg = io.parse_run_config(base_doc())
    assert (cfg.d, cfg.n) == (3, 5)
    assert cfg.kappa2 == 0.0 and cfg.kappa_dbody == 0.0
    assert cfg.t_max == 100.0 and cfg.dt is None
    assert cfg.frequencies.kind == "none"
    assert cfg.initial.kind == "random"
    assert cfg.output.summary is None


def test_parse_round_trips_through_dict():
    cfg = io.parse_run_config(full_doc())
    assert io.parse_run_config(io.run_config_to_dict(cfg)) == cfg


@pytest.mark.parametrize(
    "mutate,fragment",
    [
        (lambda d: d.update(extra=1), "unknown key"),
        (lambda d: d.update(schema="spheresync-run/2"), "schema"),
        (lambda d: d.pop("schema"), "schema"),
        (lambda d: d.pop("model"), "model"),
        (lambda d: d["model"].update(coupling=2.0), "unknown key"),
        (lambda d: d["model"].pop("d"), "'d'"),
        (lambda d: d["model"].pop("n"), "'n'"),
        (lambda d: d["model"].update(d=1), "at least 2"),
        (lambda d: d["model"].update(n=2), "at least d=3"),
        (lambda d: d["model"].update(d=True), "integer"),
        (lambda d: d["model"].update(d=2.5), "integer"),
        (lambda d: d["model"].update(kappa2="strong"), "number"),
        (lambda d: d.update(integration={"t_max": 0.0}), "positive"),
        (lambda d: d.update(integration={"t_max": -3.0}), "positive"),
        (lambda d: d.update(integration={"dt": 0.0}), "positive"),
        (lambda d: d.update(integration={"sample_stride": 0}), "at least 1"),
        (lambda d: d.update(integration={"checkpoint_stride": -1}), "non-negative"),
        (lambda d: d.update(integration={"warmup": 5}), "unknown key"),
        (lambda d: d.update(integration=7), "JSON object"),
        (lambda d: d.update(frequencies={"kind": "lorentzian"}), "frequencies.kind"),
        (lambda d: d.update(frequencies={"kind": "random", "magnitude": -1.0}), "non-negative"),
        (lambda d: d.update(initial={"kind": "guess"}), "initial.kind"),
        (lambda d: d.update(initial={"family": "d9_ring"}), "initial.family"),
        (lambda d: d.update(initial={"kind": "catalog"}), "needs initial.family"),
        (lambda d: d.update(initial={"kind": "file"}), "needs initial.path"),
        (lambda d: d.update(initial={"path": 7}), "initial.path"),
        (lambda d: d.update(initial={"jitter": -0.1}), "non-negative"),
        (lambda d: d.update(output={"summary": 3}), "string path"),
        (lambda d: d.update(output={"log": "x"}), "unknown key"),
    ],
)
def test_parse_rejects_bad_documents(mutate, fragment):
    doc = base_doc()
    mutate(doc)
    with pytest.raises(io.ConfigError, match=fragment):
        io.parse_run_config(doc)


def test_parse_rejects_non_mapping():
    with pytest.raises(io.ConfigError, match="JSON object"):
        io.parse_run_config([1, 2, 3])


def test_load_run_config_round_trip(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(full_doc()))
    assert io.load_run_config(path) == io.parse_run_config(full_doc())


def test_load_run_config_rejects_malformed_json(tmp_path):
    path = tmp_path / "run.json"
    path.write_text("{not json")
    with pytest.raises(io.ConfigError, match="not valid JSON"):
        io.load_run_config(path)


def test_load_run_config_missing_file_is_oserror(tmp_path):
    with pytest.raises(OSError):
        io.load_run_config(tmp_path / "absent.json")


# ---------------------------------------------------------------------------
# Building model inputs from a config


def test_build_params_without_frequencies():
    params = io.build_params(io.parse_run_config(base_doc(kappa2=0.7)))
    assert params.frequencies is None
    assert params.kappa2 == 0.7


def test_build_params_with_random_frequencies():
    doc = base_doc()
    doc["frequencies"] = {"kind": "random", "magnitude": 0.25, "seed": 9}
    params = io.build_params(io.parse_run_config(doc))
    assert params.frequencies.shape == (5, 3, 3)
    assert params.frequency_magnitude == pytest.approx(0.25, rel=1e-12)
    again = io.build_params(io.parse_run_config(doc))
    np.testing.assert_array_equal(params.frequencies, again.frequencies)


def test_build_initial_random_is_seed_reproducible():
    cfg = io.parse_run_config(base_doc())
    np.testing.assert_array_equal(io.build_initial_state(cfg), io.build_initial_state(cfg))
    np.testing.assert_allclose(np.linalg.norm(io.build_initial_state(cfg), axis=1), 1.0)


def test_build_initial_colocated_sits_on_last_axis():
    cfg = io.parse_run_config(base_doc())
    cfg = io.parse_run_config({**base_doc(), "initial": {"kind": "colocated"}})
    x0 = io.build_initial_state(cfg)
    np.testing.assert_array_equal(x0, np.tile([0.0, 0.0, 1.0], (5, 1)))


def test_build_initial_catalog_ring():
    doc = base_doc()
    doc["initial"] = {"kind": "catalog", "family": "d3_ring"}
    x0 = io.build_initial_state(io.parse_run_config(doc))
    np.testing.assert_allclose(
        x0, catalog.exact_configuration(catalog.ring_state(3, 5)), atol=1e-15
    )


def test_build_initial_catalog_family_dimension_mismatch():
    doc = base_doc()
    doc["initial"] = {"kind": "catalog", "family": "d4_torus"}
    with pytest.raises(io.ConfigError, match="lives in d=4"):
        io.build_initial_state(io.parse_run_config(doc))


def test_build_initial_basis_needs_square_count():
    doc = base_doc()
    doc["initial"] = {"kind": "catalog", "family": "basis"}
    with pytest.raises(io.ConfigError, match="n = d"):
        io.build_initial_state(io.parse_run_config(doc))


def test_build_initial_combined_above_threshold():
    doc = base_doc(kappa2=5.0, kappa_dbody=1.0)
    doc["initial"] = {"kind": "catalog", "family": "d3_combined"}
    with pytest.raises(io.ConfigError, match="existence threshold"):
        io.build_initial_state(io.parse_run_config(doc))


def test_build_initial_from_file_with_base_dir(tmp_path):
    state = geometry.random_unit_configuration(3, 5, seed=1)
    io.save_state(tmp_path / "start.csv", state)
    doc = base_doc()
    doc["initial"] = {"kind": "file", "path": "start.csv"}
    x0 = io.build_initial_state(io.parse_run_config(doc), base_dir=str(tmp_path))
    np.testing.assert_allclose(x0, state, atol=1e-15)


def test_build_initial_file_shape_mismatch(tmp_path):
    io.save_state(tmp_path / "start.csv", geometry.random_unit_configuration(3, 7, seed=1))
    doc = base_doc()
    doc["initial"] = {"kind": "file", "path": str(tmp_path / "start.csv")}
    with pytest.raises(io.ConfigError, match="shape"):
        io.build_initial_state(io.parse_run_config(doc))


def test_build_initial_jitter_perturbs_but_keeps_norms():
    doc = base_doc()
    doc["initial"] = {"kind": "colocated", "jitter": 1e-3, "jitter_seed": 2}
    x0 = io.build_initial_state(io.parse_run_config(doc))
    np.testing.assert_allclose(np.linalg.norm(x0, axis=1), 1.0, atol=1e-14)
    assert 0.0 < float(np.abs(x0[:, :2]).max()) < 0.01


# ---------------------------------------------------------------------------
# State, trajectory, and summary files


def test_state_round_trip_parses_bit_exact(tmp_path):
    state = geometry.random_unit_configuration(4, 9, seed=3)
    path = tmp_path / "state.csv"
    io.save_state(path, state)
    assert path.read_text().startswith("# spheresync state n=9 d=4\n")
    raw = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    np.testing.assert_array_equal(raw, state)
    # load_state renormalizes on the way in, which may move the last bit.
    loaded = io.load_state(path)
    np.testing.assert_allclose(loaded, state, atol=5e-16)
    np.testing.assert_allclose(np.linalg.norm(loaded, axis=1), 1.0, atol=5e-16)


def test_load_state_rejects_non_unit_rows(tmp_path):
    path = tmp_path / "state.csv"
    io.save_state(path, 1.1 * np.eye(3))
    with pytest.raises(io.ConfigError, match="unit vectors"):
        io.load_state(path)


def test_save_state_rejects_wrong_rank(tmp_path):
    with pytest.raises(ValueError, match="2-d"):
        io.save_state(tmp_path / "x.csv", np.ones(4))


def test_trajectory_round_trip(tmp_path):
    params = dynamics.ModelParams(d=3, n=5, kappa2=1.0, kappa_dbody=0.5)
    result = dynamics.simulate(
        geometry.random_unit_configuration(3, 5, seed=0), params, t_max=1.0, dt=0.01,
        sample_stride=5,
    )
    path = tmp_path / "traj.csv"
    io.write_trajectory(path, result.record)
    data = io.read_trajectory(path)
    np.testing.assert_array_equal(data["t"], result.record.times)
    np.testing.assert_array_equal(data["r"], result.record.order_parameter)
    np.testing.assert_array_equal(data["V_pair"], result.record.v_pair)
    np.testing.assert_array_equal(data["V_dbody"], result.record.v_dbody)
    np.testing.assert_array_equal(data["max_speed"], result.record.max_speed)


def test_read_trajectory_rejects_foreign_header(tmp_path):
    path = tmp_path / "traj.csv"
    path.write_text("time,order\n0.0,1.0\n")
    with pytest.raises(io.ConfigError, match="header"):
        io.read_trajectory(path)


def test_save_checkpoints_names_by_step(tmp_path):
    params = dynamics.ModelParams(d=3, n=4, kappa2=1.0)
    result = dynamics.simulate(
        geometry.random_unit_configuration(3, 4, seed=2), params, t_max=0.5, dt=0.01,
        steady_tol=0.0, checkpoint_stride=20,
    )
    paths = io.save_checkpoints(tmp_path / "ck", result.record)
    names = [os.path.basename(p) for p in paths]
    assert names == ["state_000000000.csv", "state_000000020.csv", "state_000000040.csv"]
    for path, (_, state) in zip(paths, result.record.checkpoints):
        raw = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
        np.testing.assert_array_equal(raw, state)


def test_summary_is_deterministic_and_versioned(tmp_path):
    cfg = io.parse_run_config(full_doc())
    _, report = io.execute_run(
        io.parse_run_config({**base_doc(kappa2=1.0), "integration": {"t_max": 1.0}})
    )
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    io.write_summary(a, report, cfg)
    io.write_summary(b, report, cfg)
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["schema"] == io.SCHEMA_SUMMARY
    assert doc["run"]["schema"] == io.SCHEMA_RUN
    assert doc["classification"] == report.classification


# ---------------------------------------------------------------------------
# execute_run


def test_execute_run_writes_every_named_output(tmp_path):
    doc = {
        "schema": io.SCHEMA_RUN,
        "model": {"d": 3, "n": 5, "kappa2": 1.5},
        "integration": {"t_max": 2.0, "dt": 0.01, "sample_stride": 5, "checkpoint_stride": 5},
        "output": {
            "trajectory": "traj.csv",
            "summary": "summary.json",
            "state": "final.csv",
            "checkpoints": "ck",
        },
    }
    cfg = io.parse_run_config(doc)
    result, report = io.execute_run(cfg, base_dir=str(tmp_path))
    assert (tmp_path / "traj.csv").exists()
    assert (tmp_path / "summary.json").exists()
    assert (tmp_path / "final.csv").exists()
    np.testing.assert_allclose(
        io.load_state(tmp_path / "final.csv"), result.final_state, atol=5e-16
    )
    assert len(list((tmp_path / "ck").glob("state_*.csv"))) == len(result.record.checkpoints)


def test_checkpoints_reproduce_sampled_order_parameter(tmp_path):
    doc = {
        "schema": io.SCHEMA_RUN,
        "model": {"d": 3, "n": 6, "kappa2": 0.8, "kappa_dbody": 1.0},
        "integration": {"t_max": 1.0, "dt": 0.01, "sample_stride": 10, "checkpoint_stride": 10},
        "output": {"trajectory": "traj.csv", "checkpoints": "ck"},
    }
    result, _ = io.execute_run(io.parse_run_config(doc), base_dir=str(tmp_path))
    data = io.read_trajectory(tmp_path / "traj.csv")
    by_step = dict(zip(result.record.steps.tolist(), data["r"]))
    assert len(result.record.checkpoints) > 3
    for step, state in result.record.checkpoints:
        r_state = float(np.linalg.norm(np.asarray(state).mean(axis=0)))
        assert r_state == pytest.approx(by_step[step], abs=1e-12)


# ---------------------------------------------------------------------------
# CLI


def write_config(tmp_path, doc, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_cli_simulate_prints_classification(tmp_path, capsys):
    doc = {
        "schema": io.SCHEMA_RUN,
        "model": {"d": 3, "n": 6, "kappa2": 0.0, "kappa_dbody": 1.0},
        "integration": {"t_max": 5.0, "dt": 0.01},
        "initial": {"kind": "catalog", "family": "d3_ring"},
    }
    code = cli.main(["simulate", write_config(tmp_path, doc)])
    out = capsys.readouterr().out
    assert code == 0
    assert "classification=ring_equispaced" in out
    assert "steady=True" in out


def test_cli_simulate_output_overrides(tmp_path, capsys):
    doc = {
        "schema": io.SCHEMA_RUN,
        "model": {"d": 2, "n": 4, "kappa2": 1.0},
        "integration": {"t_max": 2.0, "dt": 0.01},
    }
    summary = tmp_path / "s.json"
    code = cli.main(
        ["simulate", write_config(tmp_path, doc), "--out-summary", str(summary), "--verbose"]
    )
    capsys.readouterr()
    assert code == 0
    assert json.loads(summary.read_text())["schema"] == io.SCHEMA_SUMMARY


def test_cli_simulate_missing_config_is_exit_2(tmp_path, capsys):
    assert cli.main(["simulate", str(tmp_path / "none.json")]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_simulate_invalid_config_is_exit_1(tmp_path, capsys):
    path = write_config(tmp_path, {**base_doc(), "typo": 1})
    assert cli.main(["simulate", path]) == 1
    assert "unknown key" in capsys.readouterr().err


def test_cli_simulate_malformed_json_is_exit_1(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{oops")
    assert cli.main(["simulate", str(path)]) == 1
    assert "not valid JSON" in capsys.readouterr().err


def test_cli_usage_error_is_exit_1(capsys):
    with pytest.raises(SystemExit) as err:
        cli.main([])
    assert err.value.code == 1
    capsys.readouterr()


def test_cli_version(capsys):
    with pytest.raises(SystemExit) as err:
        cli.main(["--version"])
    assert err.value.code == 0
    assert "spheresync" in capsys.readouterr().out


def test_parse_grid_forms():
    assert cli._parse_grid("0:1:0.5") == pytest.approx([0.0, 0.5, 1.0])
    assert cli._parse_grid("0:1:0.3") == pytest.approx([0.0, 0.3, 0.6, 0.9, 1.0])
    assert cli._parse_grid("0.2,0.7") == pytest.approx([0.2, 0.7])
    with pytest.raises(io.ConfigError, match="grid"):
        cli._parse_grid("0:1")
    with pytest.raises(io.ConfigError, match="positive"):
        cli._parse_grid("0:1:-0.5")


def sweep_doc():
    return {
        "schema": io.SCHEMA_RUN,
        "model": {"d": 3, "n": 5, "kappa2": 0.0, "kappa_dbody": 1.0},
        "integration": {"t_max": 1.0, "dt": 0.01},
        "initial": {"kind": "random", "seed": 6},
    }


def test_cli_sweep_writes_index_and_points(tmp_path, capsys):
    out_dir = tmp_path / "sweep"
    code = cli.main(
        ["sweep", write_config(tmp_path, sweep_doc()), "--kappa2", "0.0,0.5,1.0",
         "--out-dir", str(out_dir)]
    )
    capsys.readouterr()
    assert code == 0
    lines = (out_dir / "sweep.csv").read_text().splitlines()
    assert lines[0] == "kappa2,classification,r_final,steady,t_final"
    assert len(lines) == 4
    for i in range(3):
        point = json.loads((out_dir / f"point_{i:03d}.summary.json").read_text())
        assert point["schema"] == io.SCHEMA_SUMMARY


def test_cli_sweep_parallel_matches_serial(tmp_path, capsys):
    cfg_path = write_config(tmp_path, sweep_doc())
    serial, parallel = tmp_path / "serial", tmp_path / "parallel"
    assert cli.main(["sweep", cfg_path, "--kappa2", "0:1:0.5", "--out-dir", str(serial)]) == 0
    assert (
        cli.main(
            ["sweep", cfg_path, "--kappa2", "0:1:0.5", "--out-dir", str(parallel),
             "--workers", "2"]
        )
        == 0
    )
    capsys.readouterr()
    assert (serial / "sweep.csv").read_bytes() == (parallel / "sweep.csv").read_bytes()


def test_cli_verify_passes(capsys):
    assert cli.main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "checks passed" in out
    assert "FAIL" not in out


def test_cli_reduce_n3(tmp_path, capsys):
    out = tmp_path / "series.csv"
    code = cli.main(["reduce-n3", "--t-max", "2.0", "--dt", "0.005", "--out", str(out)])
    text = capsys.readouterr().out
    assert code == 0
    assert "overlap window" in text
    assert out.read_text().startswith("t,u_full,u_reduced,volume_full,volume_reduced\n")


def test_cli_reduce_n3_rejects_bad_u0(capsys):
    assert cli.main(["reduce-n3", "--u0", "1.5"]) == 1
    capsys.readouterr()


def test_cli_align_and_hopf(tmp_path, capsys):
    state4 = catalog.exact_configuration(catalog.ring_state(4, 8))
    path4 = tmp_path / "ring4.csv"
    io.save_state(path4, state4)

    aligned_path = tmp_path / "aligned.csv"
    code = cli.main(["align", str(path4), "--canonicalize", "--out", str(aligned_path)])
    out = capsys.readouterr().out
    assert code == 0 and "r=" in out
    aligned = io.load_state(aligned_path)
    mean = aligned.mean(axis=0)
    assert float(np.abs(mean[:-1]).max()) < 1e-12

    hopf_path = tmp_path / "hopf.csv"
    code = cli.main(["hopf", str(path4), "--out", str(hopf_path)])
    out = capsys.readouterr().out
    assert code == 0 and "max |z|" in out
    points = io.load_state(hopf_path)
    assert float(np.abs(points[:, 2]).max()) < 1e-12


def test_cli_hopf_rejects_wrong_dimension(tmp_path, capsys):
    path = tmp_path / "ring3.csv"
    io.save_state(path, catalog.exact_configuration(catalog.ring_state(3, 6)))
    assert cli.main(["hopf", str(path)]) == 1
    assert "d=4" in capsys.readouterr().err


def test_cli_align_missing_file_is_exit_2(tmp_path, capsys):
    assert cli.main(["align", str(tmp_path / "none.csv")]) == 2
    capsys.readouterr()


def test_cli_bench_quick(tmp_path, capsys):
    out = tmp_path / "bench.json"
    code = cli.main(
        ["bench", "--d", "3", "--n", "6", "--naive-n", "5", "--repeats", "1",
         "--out", str(out)]
    )
    text = capsys.readouterr().out
    assert code == 0
    assert "fast vs enumeration" in text
    report = json.loads(out.read_text())
    assert report["speedup_fast_vs_naive"] > 1.0


def test_module_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "spheresync", "--version"],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0
    assert "spheresync" in proc.stdout
