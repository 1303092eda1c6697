import matplotlib.colors
import numpy as np
import pytest

from proxemic_rl import io as pio
from proxemic_rl import plotting
from proxemic_rl.cli import (EXIT_OK, EXIT_SELFTEST, EXIT_USAGE, UsageError, export_curves,
                             export_maps, main, parse_cli)
from proxemic_rl.env import GridConfig, Region
from proxemic_rl.experiment import BatchResult, ExperimentConfig, run_batch
from proxemic_rl.issuer import Scenario
from proxemic_rl.oracle import value_iteration


def small_batch(n_agents=2, steps=300, scenario=Scenario.S3_DISTANCE):
    return run_batch(ExperimentConfig(scenario=scenario, n_agents=n_agents, total_steps=steps))


def test_parse_scenario_and_seed(tmp_path):
    inv = parse_cli(["run", "--scenario", "s3", "--seed", "42", "--out", str(tmp_path)])
    assert inv.command == "run"
    assert inv.config == ExperimentConfig(scenario=Scenario.S3_DISTANCE, master_seed=42)


def test_parse_paper_layout(tmp_path):
    inv = parse_cli(["run", "--issuer", "6,8", "--rows", "10", "--cols", "12", "--out", str(tmp_path)])
    g = inv.config.grid
    assert (g.rows, g.cols, tuple(g.issuer_pos), tuple(g.start_pos)) == (10, 12, (6, 8), (0, 0))
    assert inv.config == ExperimentConfig()


@pytest.mark.parametrize("argv", [
    ["run", "--gamma", "1.5"],
    ["run", "--epsilon", "-0.1"],
    ["run", "--scenario", "s9"],
    ["run", "--issuer", "6;8"],
    ["run", "--issuer", "0,0", "--scenario", "s3"],
    ["run", "--rows", "ten"],
    ["run", "--agents", "0"],
    ["run", "--unknown-flag", "1"],
    ["dance"],
])
def test_usage_errors(argv, tmp_path):
    with pytest.raises(UsageError):
        parse_cli(argv + ["--out", str(tmp_path)])
    assert main(argv + ["--out", str(tmp_path)]) == EXIT_USAGE


def test_missing_out_is_usage_error():
    assert main(["run"]) == EXIT_USAGE


def test_config_file_and_override(tmp_path):
    cfgfile = tmp_path / "exp.cfg"
    cfgfile.write_text("# layout\nscenario = s2\nagents=7\nsteps = 123\n--ping-limit = 3\nseed=5\n")
    inv = parse_cli(["run", "--config", str(cfgfile), "--seed", "9", "--out", str(tmp_path)])
    c = inv.config
    assert (c.scenario, c.n_agents, c.total_steps, c.master_seed) == (Scenario.S2_RANDOM, 7, 123, 9)
    assert c.grid.max_incorrect_pings == 3


def test_config_file_unknown_key(tmp_path):
    cfgfile = tmp_path / "exp.cfg"
    cfgfile.write_text("colour = blue\n")
    with pytest.raises(UsageError):
        parse_cli(["run", "--config", str(cfgfile), "--out", str(tmp_path)])


def test_export_curves(tmp_path):
    b = small_batch(n_agents=3, steps=250)
    files = export_curves(b, tmp_path)
    assert [f.name for f in files] == ["maxq_trace.csv", "maxq_trace.svg"]
    header, rows = pio.read_csv(tmp_path / "maxq_trace.csv")
    assert header == ["t", "mean", "min", "max"] and len(rows) == 250
    data = pio.read_trace_csv(tmp_path / "maxq_trace.csv")
    assert np.array_equal(data[:, 0], np.arange(250))
    # 17 significant digits round-trip float64 exactly
    assert np.array_equal(data[:, 1], b.trace_mean)
    assert np.array_equal(data[:, 2], b.trace_min)
    assert np.array_equal(data[:, 3], b.trace_max)
    assert (tmp_path / "maxq_trace.svg").read_text().lstrip().startswith("<?xml")


def test_single_agent_columns_identical(tmp_path):
    export_curves(small_batch(n_agents=1), tmp_path)
    data = pio.read_trace_csv(tmp_path / "maxq_trace.csv")
    assert np.array_equal(data[:, 1], data[:, 2]) and np.array_equal(data[:, 1], data[:, 3])


def test_full_length_trace_rows(tmp_path):
    b = BatchResult(np.zeros(10_000), np.zeros(10_000), np.zeros(10_000),
                    np.zeros((10, 12, 5)), 1, np.zeros(1))
    export_curves(b, tmp_path)
    _, rows = pio.read_csv(tmp_path / "maxq_trace.csv")
    assert len(rows) == 10_000


def test_export_maps(tmp_path, grid):
    b = small_batch()
    files = export_maps(b, grid, tmp_path)
    assert [f.name for f in files] == ["final_q.csv", "movement_q.svg", "ping_q.svg"]
    header, rows = pio.read_csv(tmp_path / "final_q.csv")
    assert header == ["row", "col", "q_up", "q_down", "q_left", "q_right", "q_ping", "q_move_max"]
    assert len(rows) == 120
    arr = pio.read_qtable_csv(tmp_path / "final_q.csv", 10, 12, 6)
    assert np.array_equal(arr[..., :5], b.mean_q)
    assert np.array_equal(arr[..., 5], b.movement_q_max)


def test_all_zero_heatmap_is_mid_scale(tmp_path, grid):
    zeros = np.zeros((10, 12))
    assert plotting.symmetric_limit(zeros) == 1.0
    assert plotting.plot_heatmap(tmp_path / "z.svg", zeros, grid, title="zero").exists()
    norm = matplotlib.colors.Normalize(-1.0, 1.0)
    assert np.all(norm(zeros) == 0.5)
    assert plotting.symmetric_limit(np.array([[-0.3, 0.1]])) == pytest.approx(0.3)


def test_svg_render_is_deterministic(tmp_path, grid):
    vals = np.linspace(-1, 1, 120).reshape(10, 12)
    a = plotting.plot_heatmap(tmp_path / "a.svg", vals, grid).read_bytes()
    b = plotting.plot_heatmap(tmp_path / "b.svg", vals, grid).read_bytes()
    assert a == b


def test_moving_average():
    x = np.array([0.0, 2.0, 4.0, 6.0])
    assert np.allclose(plotting.moving_average(x, 2), [0.0, 1.0, 3.0, 5.0])
    assert np.array_equal(plotting.moving_average(x, 1), x)


def test_run_writes_manifest_and_replays(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    argv = ["run", "--scenario", "s2", "--agents", "3", "--steps", "400", "--seed", "17"]
    assert main(argv + ["--out", str(out1)]) == EXIT_OK
    manifest = pio.read_manifest(out1 / "manifest.json")
    assert manifest["config"]["seed"] == 17
    names = {o["file"] for o in manifest["outputs"]}
    assert names == {"maxq_trace.csv", "maxq_trace.svg", "final_q.csv", "movement_q.svg", "ping_q.svg"}
    for o in manifest["outputs"]:
        assert pio.sha256(out1 / o["file"]) == o["sha256"]
    assert main(["run", "--config", str(out1 / "manifest.json"), "--out", str(out2)]) == EXIT_OK
    for name in ("maxq_trace.csv", "final_q.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_oracle_command(tmp_path):
    assert main(["oracle", "--scenario", "s3", "--out", str(tmp_path)]) == EXIT_OK
    header, rows = pio.read_csv(tmp_path / "exact_q.csv")
    assert header == ["row", "col", "pings", "q_up", "q_down", "q_left", "q_right", "q_ping"]
    assert len(rows) == 120 * 5
    row = next(r for r in rows if r[:3] == ["6", "6", "0"])
    assert float(row[7]) == pytest.approx(6 / 7, abs=1e-12)
    exact = value_iteration(GridConfig(), Scenario.S3_DISTANCE)
    assert float(row[7]) == exact.q((6, 6), 0, 4)
    assert (tmp_path / "oracle_v.svg").exists()


def test_regions_command(tmp_path):
    assert main(["regions", "--out", str(tmp_path)]) == EXIT_OK
    header, rows = pio.read_csv(tmp_path / "regions.csv")
    assert header == ["row", "col", "region"]
    labels = [r[2] for r in rows]
    assert labels.count("issuer") == 1 and labels.count("target") == 16
    assert labels.count("uncomfortable") == 8 and labels.count("outside") == 95
    assert np.sum(pio.region_grid(GridConfig()) == Region.TARGET) == 16


def test_qtable_csv_round_trip(tmp_path, grid):
    from proxemic_rl.qlearning import QTable
    q = QTable.from_array(np.random.default_rng(0).normal(size=(10, 12, 5)))
    pio.write_qtable_csv(tmp_path / "q.csv", q)
    assert np.array_equal(pio.read_qtable_csv(tmp_path / "q.csv", 10, 12), q.as_array())


def test_selftest_passes(capsys):
    assert main(["selftest"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("PASS") == 5 and "FAIL" not in out


def test_selftest_failure_exit_code(monkeypatch):
    import proxemic_rl.cli as cli
    monkeypatch.setattr(cli, "run_selftest", lambda: [("broken", False, "forced")])
    assert main(["selftest"]) == EXIT_SELFTEST


def test_runtime_error_exit_code(tmp_path, monkeypatch):
    import proxemic_rl.cli as cli

    def boom(*a, **k):
        raise OSError("disk full")
    monkeypatch.setattr(cli, "run_agents", boom)
    assert main(["run", "--agents", "1", "--steps", "5", "--out", str(tmp_path)]) == 2
