"""Command-line interface: subcommands, artifacts, exit codes."""
import json

import pytest

import returncast.cli as cli
from returncast.errors import NumericError


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("data")
    code = cli.main(
        ["synth", "--generations", "3", "--seed", "0",
         "--months-after-final-ga", "8", "--out", str(d)]
    )
    assert code == 0
    return d


def _cycle_args(data_dir, out, extra=()):
    return [
        "--history", str(data_dir / "history.csv"),
        "--ga", str(data_dir / "ga.csv"),
        "--generation", "gen2",
        "--cycle", "2012-09",
        "--out", str(out),
        *extra,
    ]


def test_synth_writes_both_csvs(data_dir):
    assert (data_dir / "history.csv").exists()
    assert (data_dir / "ga.csv").exists()
    header = (data_dir / "history.csv").read_text().splitlines()[0]
    assert header == "generation_id,month,shipments,upgrades,new_receipts,gross_returns"


def test_run_cycle_writes_report_and_record(data_dir, tmp_path, capsys):
    out = tmp_path / "run"
    assert cli.main(["run-cycle", *_cycle_args(data_dir, out)]) == 0
    assert (out / "report.csv").exists()
    assert (out / "cycles" / "gen2" / "2012-09.json").exists()
    stdout = capsys.readouterr().out
    assert "gen2 2012-09" in stdout
    assert "winner" in stdout


def test_stage_commands_write_their_artifacts(data_dir, tmp_path):
    expected = {
        "ingest": "history.csv",
        "prepare": "prepared.csv",
        "analyze": "analysis.json",
        "train": "leaderboard.json",
        "forecast": "forecast.json",
        "ewa": "ewa.json",
        "adjust": "adjust.json",
        "report": "report.csv",
    }
    for command, artifact in expected.items():
        out = tmp_path / command
        args = (
            ["ingest", "--history", str(data_dir / "history.csv"),
             "--ga", str(data_dir / "ga.csv"), "--out", str(out)]
            if command == "ingest"
            else [command, *_cycle_args(data_dir, out)]
        )
        assert cli.main(args) == 0, command
        assert (out / artifact).exists(), command

    leaderboard = json.loads((tmp_path / "train" / "leaderboard.json").read_text())
    assert len(leaderboard["rows"]) == 5
    mapes = [r["mape_best_fit"] for r in leaderboard["rows"]]
    assert mapes == sorted(mapes)


def test_stage_commands_do_not_persist_cycles(data_dir, tmp_path):
    out = tmp_path / "probe"
    assert cli.main(["forecast", *_cycle_args(data_dir, out)]) == 0
    assert not (out / "cycles" / "gen2" / "2012-09.json").exists()


def test_reruns_are_byte_identical(data_dir, tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run-cycle", *_cycle_args(data_dir, out_a)]) == 0
    assert cli.main(["run-cycle", *_cycle_args(data_dir, out_b)]) == 0
    assert (out_a / "report.csv").read_bytes() == (out_b / "report.csv").read_bytes()


def test_planner_band_choice_is_recorded(data_dir, tmp_path):
    out = tmp_path / "uci"
    assert cli.main(["run-cycle", *_cycle_args(data_dir, out, ["--select", "uci"])]) == 0
    record = json.loads((out / "cycles" / "gen2" / "2012-09.json").read_text())
    assert record["planner_selected"] == "UCI"
    assert record["selected_series"] == record["forecast"]["uci"]


def test_missing_input_exits_2(data_dir, tmp_path, capsys):
    args = [
        "run-cycle",
        "--history", str(tmp_path / "nope.csv"),
        "--ga", str(data_dir / "ga.csv"),
        "--generation", "gen2",
        "--cycle", "2012-09",
        "--out", str(tmp_path),
    ]
    assert cli.main(args) == 2
    assert "nope.csv" in capsys.readouterr().err


def test_validation_failure_exits_1(data_dir, tmp_path, capsys):
    # the latest generation has no successor launch, so it cannot be forecast
    args = ["run-cycle", *_cycle_args(data_dir, tmp_path / "v")]
    args[args.index("gen2")] = "gen3"
    assert cli.main(args) == 1
    assert capsys.readouterr().err


def test_numeric_failure_exits_3(data_dir, tmp_path, monkeypatch, capsys):
    def explode(*args, **kwargs):
        raise NumericError("degenerate input")

    monkeypatch.setattr(cli, "run_cycle", explode)
    assert cli.main(["run-cycle", *_cycle_args(data_dir, tmp_path / "n")]) == 3
    assert "numeric failure" in capsys.readouterr().err


def test_version_flag():
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0
