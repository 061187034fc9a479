import json

import pytest

from yamabe_flow import cli
from yamabe_flow.cli import main, parse_config
from yamabe_flow.config import load_config
from yamabe_flow.geometry import BackgroundKind

SMALL = ["--ell", "3", "--nodes", "40", "--dt", "1e-3", "--t-final", "0.01"]


def test_flags_map_onto_config_keys():
    config = parse_config(
        ["run", "--profile", "desk", "--preset", "powerlaw:1", "--r-min", "1", "--ell", "5"]
    )
    assert config.command == "run"
    assert config.preset.background is BackgroundKind.EUCLIDEAN
    assert config.r_min == 1.0
    assert config.ell == 5.0


def test_flags_beat_the_config_file(tmp_path):
    path = tmp_path / "settings.env"
    path.write_text("NODES=120\nDT=0.01\n")
    config = parse_config(["run", "--profile", "desk", "--config", str(path), "--dt", "0.002"])
    assert config.nodes == 120
    assert config.dt == 0.002


def test_missing_command_exits():
    with pytest.raises(SystemExit):
        parse_config([])


def test_configuration_errors_exit_with_code_two(tmp_path):
    assert main(["run", "--dimension", "2", "--output", str(tmp_path)]) == 2


def test_failed_checks_exit_with_code_one(tmp_path, monkeypatch):
    class Failing:
        passed = False

    monkeypatch.setattr(cli, "execute", lambda config: Failing())
    assert main(["run", *SMALL, "--output", str(tmp_path)]) == 1


def test_run_writes_every_file(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--profile", "desk", *SMALL, "--output", str(out)]) == 0
    names = ("trajectory.csv", "trajectory.json", "boundary.csv", "summary.md", "run.env", "run.log")
    for name in names:
        assert (out / name).is_file(), name
    sidecar = json.loads((out / "trajectory.json").read_text())
    assert sidecar["diagnostics"]["passed"] is True
    assert sidecar["n_times"] == 11
    assert "✅ all checks passed" in (out / "summary.md").read_text()


def test_reruns_are_byte_identical(tmp_path):
    argv = ["run", "--profile", "desk", *SMALL, "--output", str(tmp_path)]
    names = ("trajectory.csv", "trajectory.json", "boundary.csv", "summary.md", "run.env")
    assert main(argv) == 0
    first = {name: (tmp_path / name).read_bytes() for name in names}
    assert main(argv) == 0
    for name in names:
        assert (tmp_path / name).read_bytes() == first[name], name


def test_run_env_reloads_to_the_same_config(tmp_path):
    argv = ["run", "--profile", "desk", *SMALL, "--preset", "constant:2", "--output", str(tmp_path)]
    assert main(argv) == 0
    reloaded = load_config("run", profile="desk", config_file=tmp_path / "run.env")
    assert reloaded == parse_config(argv)


def test_barriers_command(tmp_path):
    argv = ["barriers", "--profile", "desk", *SMALL, "--output", str(tmp_path)]
    assert main(argv) == 0
    sidecar = json.loads((tmp_path / "trajectory.json").read_text())
    names = [check["name"] for check in sidecar["diagnostics"]["barriers"]["checks"]]
    assert "sandwich_lower" in names
    assert "flat_barrier_upper" in names


def test_compare_command(tmp_path):
    argv = [
        "compare",
        "--profile",
        "desk",
        *SMALL,
        "--preset",
        "constant:1",
        "--compare-preset",
        "constant:0.8",
        "--output",
        str(tmp_path),
    ]
    assert main(argv) == 0
    assert (tmp_path / "comparison.csv").is_file()
    sidecar = json.loads((tmp_path / "trajectory.json").read_text())
    assert sidecar["diagnostics"]["comparison"]["ordering_violation"] == 0


def test_exhaust_command(tmp_path):
    argv = [
        "exhaust",
        "--profile",
        "desk",
        "--ladder",
        "3,4,5",
        "--nodes",
        "61",
        "--t-final",
        "0.01",
        "--output",
        str(tmp_path),
    ]
    assert main(argv) == 0
    convergence = json.loads((tmp_path / "trajectory.json").read_text())["diagnostics"]["convergence"]
    assert convergence["radii"] == [3.0, 4.0, 5.0]
    assert max(convergence["differences"]) < 1e-10
    assert not (tmp_path / "boundary.csv").exists()


def test_incompleteness_command(tmp_path):
    argv = [
        "incompleteness",
        "--profile",
        "desk",
        "--domains",
        "4,6",
        "--t-samples",
        "0.01",
        "--nodes",
        "61",
        "--output",
        str(tmp_path),
    ]
    assert main(argv) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["diagnostics"]["completeness"]["verdict_trend"] == "DivergingWithDomain"
    assert not (tmp_path / "trajectory.csv").exists()


def test_incompleteness_command_on_the_punctured_sphere(tmp_path):
    argv = [
        "incompleteness",
        "--profile",
        "desk",
        "--preset",
        "sphere",
        "--domains",
        "4,6",
        "--t-samples",
        "0.01",
        "--nodes",
        "61",
        "--output",
        str(tmp_path),
    ]
    assert main(argv) == 0
    completeness = json.loads((tmp_path / "report.json").read_text())["diagnostics"]["completeness"]
    assert completeness["verdict_trend"] == "UniformlyBounded"
    assert completeness["reference"][0][1] < 3.1416
