import logging
import sys

import pandas as pd
import pytest
from typer.testing import CliRunner

from sinktrack import cli
from sinktrack.cli import EXIT_RUNTIME, EXIT_USAGE, SimulationGrid, app
from sinktrack.entities import RESULT_COLUMNS, Method
from sinktrack.frame_loader_service import dump_frames
from sinktrack.presenters import read_results
from sinktrack.simlab import gen_constant_velocity

runner = CliRunner()


@pytest.fixture(autouse=True)
def _clean_environment(monkeypatch, tmp_path):
    monkeypatch.delenv("SINKTRACK_THREADS", raising=False)
    monkeypatch.delenv("SINKTRACK_LOG_LEVEL", raising=False)
    # keep load_dotenv from picking up a developer's .env
    monkeypatch.chdir(tmp_path)


def _run(out, *extra):
    return runner.invoke(app, ["run", "--sim", "1", "--n", "5", "--replicates", "2", "--out", str(out), *extra])


def _main(monkeypatch, *args):
    monkeypatch.setattr(sys, "argv", ["sinktrack", *args])
    with pytest.raises(SystemExit) as excinfo:
        cli.main()
    return excinfo.value.code


def test_presets_fill_unset_axes():
    grid = SimulationGrid(sim=4, n=[20])

    assert grid.n == [20]
    assert grid.m == [0.5]
    assert grid.sigma2 == [0.01, 0.05, 0.10, 0.25]
    assert grid.methods == [Method.SPEED, Method.ACCEL3D]
    assert grid.group_keys == ["sigma2"]


def test_run_writes_results(tmp_path, caplog):
    caplog.set_level(logging.INFO)
    out = tmp_path / "results.csv"
    result = _run(out)

    assert result.exit_code == 0, result.output
    assert out.read_text().splitlines()[0] == ",".join(RESULT_COLUMNS)
    rows = read_results(out)
    assert len(rows) == 4
    assert {row.method for row in rows} == {"speed", "accel3d"}
    assert "Simulation 1" in caplog.text


def test_run_is_byte_identical(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"

    assert _run(first).exit_code == 0
    assert _run(second).exit_code == 0
    assert first.read_bytes() == second.read_bytes()


def test_thread_count_does_not_change_results(tmp_path, monkeypatch):
    single, pooled = tmp_path / "single.csv", tmp_path / "pooled.csv"

    monkeypatch.setenv("SINKTRACK_THREADS", "1")
    assert _run(single).exit_code == 0
    monkeypatch.setenv("SINKTRACK_THREADS", "4")
    assert _run(pooled).exit_code == 0
    assert single.read_bytes() == pooled.read_bytes()


def test_run_overrides_and_lambda_sweep(tmp_path):
    out = tmp_path / "sweep.csv"
    result = runner.invoke(
        app,
        [
            "run", "--sim", "4", "--n", "4", "--sigma2", "0.05", "--methods", "speed",
            "--lambda-sweep", "10,100", "--replicates", "1", "--noise-model", "accumulated", "--out", str(out),
        ],
    )

    assert result.exit_code == 0, result.output
    rows = read_results(out)
    assert [(row.lambda_, row.sigma2, row.method) for row in rows] == [(10.0, 0.05, "speed"), (100.0, 0.05, "speed")]


def test_run_dumps_frames(tmp_path):
    out = tmp_path / "results.csv"
    assert _run(out, "--dump-frames", str(tmp_path / "frames")).exit_code == 0

    assert len(list((tmp_path / "frames").glob("*.csv"))) == 2


def test_plot_draws_svg(tmp_path):
    results = tmp_path / "results.csv"
    assert _run(results).exit_code == 0

    figure = tmp_path / "figure.svg"
    result = runner.invoke(app, ["plot", "--in", str(results), "--kind", "boxplot", "--group-by", "n,m", "--out", str(figure)])

    assert result.exit_code == 0, result.output
    assert "<svg" in figure.read_text()


def test_plot_rejects_unknown_column(tmp_path, monkeypatch):
    results = tmp_path / "results.csv"
    assert _run(results).exit_code == 0
    args = ["plot", "--in", str(results), "--kind", "lineplot", "--group-by", "speed_limit", "--out", str(tmp_path / "f.svg")]

    result = runner.invoke(app, args)
    assert result.exit_code != 0
    assert not (tmp_path / "f.svg").exists()
    assert _main(monkeypatch, *args) == EXIT_USAGE


def test_missing_input_is_a_runtime_error(tmp_path, monkeypatch):
    args = ["plot", "--in", str(tmp_path / "absent.csv"), "--kind", "boxplot", "--group-by", "n", "--out", str(tmp_path / "f.svg")]

    assert runner.invoke(app, args).exit_code == EXIT_RUNTIME
    assert _main(monkeypatch, *args) == EXIT_RUNTIME


def test_invalid_thread_setting_is_a_runtime_error(tmp_path, monkeypatch):
    monkeypatch.setenv("SINKTRACK_THREADS", "-2")
    assert _main(monkeypatch, "run", "--sim", "1", "--n", "3", "--replicates", "1", "--out", str(tmp_path / "r.csv")) == EXIT_RUNTIME


@pytest.mark.parametrize(
    "args",
    [
        ["run", "--sim", "5", "--out", "r.csv"],
        ["run", "--sim", "1", "--methods", "teleport", "--out", "r.csv"],
        ["run", "--sim", "1"],
        ["track", "--method", "speed", "--out", "a.csv"],
    ],
)
def test_usage_errors_exit_with_one(monkeypatch, args):
    assert _main(monkeypatch, *args) == EXIT_USAGE


def test_successful_main_exits_with_zero(tmp_path, monkeypatch):
    assert _main(monkeypatch, "run", "--sim", "1", "--n", "3", "--replicates", "1", "--out", str(tmp_path / "r.csv")) == 0


def test_track_writes_association(tmp_path):
    frames = dump_frames(gen_constant_velocity(n=4, m=0.5, steps=4, seed=3), tmp_path / "frames.csv")
    out = tmp_path / "assoc.csv"
    result = runner.invoke(
        app, ["track", "--frames", str(frames), "--method", "accel3d", "--window", "1", "--out", str(out)]
    )

    assert result.exit_code == 0, result.output
    table = pd.read_csv(out)
    assert list(table.columns) == ["source_id", "target_id", "mass"]
    assert len(table) == 16
    assert table["mass"].sum() == pytest.approx(1.0, abs=1e-4)


def test_track_rejects_out_of_range_window(tmp_path):
    frames = dump_frames(gen_constant_velocity(n=3, m=0.5, steps=3, seed=3), tmp_path / "frames.csv")
    result = runner.invoke(
        app, ["track", "--frames", str(frames), "--method", "speed", "--window", "5", "--out", str(tmp_path / "a.csv")]
    )

    assert result.exit_code != 0
    assert not (tmp_path / "a.csv").exists()


@pytest.mark.parametrize(
    "content",
    [
        "frame,id,x,y\n0,0,0,0\n",
        "",
        "frame,object_id,x,y\n0,0,abc,1\n",
        "frame,object_id,x,y\n0,0,1,1\n0,1,1,1,7\n",
    ],
)
def test_track_rejects_malformed_frames(tmp_path, monkeypatch, capsys, content):
    frames = tmp_path / "frames.csv"
    frames.write_text(content)
    args = ["track", "--frames", str(frames), "--method", "speed", "--out", str(tmp_path / "a.csv")]

    assert _main(monkeypatch, *args) == EXIT_USAGE
    assert "frames.csv" in capsys.readouterr().err
    assert not (tmp_path / "a.csv").exists()


@pytest.mark.parametrize(
    "content",
    [
        "",
        "sim_id,method\n1,speed\n",
        ",".join(RESULT_COLUMNS) + "\nx,speed,10,0,0,100,1,0.5,3,True,0\n",
    ],
)
def test_plot_rejects_malformed_results(tmp_path, monkeypatch, capsys, content):
    results = tmp_path / "results.csv"
    results.write_text(content)
    args = ["plot", "--in", str(results), "--kind", "boxplot", "--group-by", "n", "--out", str(tmp_path / "f.svg")]

    assert _main(monkeypatch, *args) == EXIT_USAGE
    assert "results.csv" in capsys.readouterr().err
    assert not (tmp_path / "f.svg").exists()
