import logging
import re

import pytest
from click.testing import CliRunner

from gridbench.app.cli.cli import cli


@pytest.fixture(autouse=True)
def detach_log_handlers():
    yield
    logging.getLogger().handlers.clear()


@pytest.fixture
def runner():
    return CliRunner()


def _invoke(runner, *args):
    return runner.invoke(cli, ["--log-level", "WARNING", *args])


def test_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert "gridbench" in result.output


def test_generate_is_deterministic(runner, tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert _invoke(runner, "generate", "--seed", "4", "-o", str(first)).exit_code == 0
    assert _invoke(runner, "generate", "--seed", "4", "-o", str(second)).exit_code == 0
    assert first.read_bytes() == second.read_bytes()
    assert len(first.read_text().splitlines()) == 1 + 26 * 4


def test_validate_generated_scenario(runner, tmp_path):
    path = tmp_path / "s.csv"
    _invoke(runner, "generate", "--areas", "AT,CH", "-o", str(path))
    result = _invoke(runner, "validate", str(path), "--areas", "AT,CH")
    assert result.exit_code == 0
    assert "2 areas, 0 missing entries" in result.output


def test_validate_reports_schema_errors(runner, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("iso,kind\nAT,load_meas\n")
    result = _invoke(runner, "validate", str(path))
    assert result.exit_code == 7
    assert "line 1" in result.output


def test_validate_exports_signals(runner, tmp_path):
    path = tmp_path / "s.csv"
    signals = tmp_path / "signals.csv"
    _invoke(runner, "generate", "--areas", "PT", "-o", str(path))
    result = _invoke(runner, "validate", str(path), "--areas", "PT", "--tau", "360", "--export-signals", str(signals))
    assert result.exit_code == 0
    assert len(signals.read_text().splitlines()) == 1 + 240


def test_topology_edge_list(runner):
    result = _invoke(runner, "topology")
    assert result.exit_code == 0
    lines = [line for line in result.output.splitlines() if line.count(",") == 3]
    assert len(lines) == 1 + 53


def test_run_and_report(runner, tmp_path):
    result = _invoke(
        runner, "run", "--areas", "AT,CH", "--steps", "3", "--horizon", "5", "--output-dir", str(tmp_path)
    )
    assert result.exit_code == 0, result.output
    assert "steps: 3" in result.output
    log_path = re.search(r"log: (\S+\.csv)", result.output).group(1)
    cost = re.search(r"cumulative_cost: (\S+)", result.output).group(1)

    report = _invoke(runner, "report", log_path)
    assert report.exit_code == 0, report.output
    assert f"cumulative_cost: {cost}" in report.output

    as_json = _invoke(runner, "report", log_path, "--json")
    assert as_json.exit_code == 0
    assert '"controller": "centralized"' in as_json.output


def test_run_from_config_file(runner, tmp_path):
    config = tmp_path / "cfg.json"
    config.write_text('{"synthetic": {"seed": 2}, "controller": "idle", "steps": 2, "areas": ["AT"]}')
    result = _invoke(runner, "run", "-c", str(config), "--output-dir", str(tmp_path))
    assert result.exit_code == 0, result.output
    assert "steps: 2" in result.output


def test_plot_run_and_scenario(runner, tmp_path):
    scenario = tmp_path / "s.csv"
    _invoke(runner, "generate", "--areas", "AT,CH", "-o", str(scenario))
    run = _invoke(
        runner, "run", "--scenario", str(scenario), "--areas", "AT,CH", "--controller", "idle",
        "--steps", "3", "--output-dir", str(tmp_path),
    )
    log_path = re.search(r"log: (\S+\.csv)", run.output).group(1)
    result = _invoke(runner, "plot", log_path, "--scenario", str(scenario), "--areas", "AT,CH", "--tau", "360")
    assert result.exit_code == 0, result.output
    assert list(tmp_path.glob("*_cost.svg"))
    assert (tmp_path / "s_load.svg").exists()


def test_plot_needs_an_input(runner):
    assert _invoke(runner, "plot").exit_code == 3


def test_unknown_controller_exit_code(runner, tmp_path):
    result = _invoke(runner, "run", "--controller", "pid", "--areas", "AT", "--output-dir", str(tmp_path))
    assert result.exit_code == 4
    assert "centralized" in result.output
    assert "decentralized" in result.output


def test_turbine_variant_rejects_long_sampling_time(runner, tmp_path):
    result = _invoke(runner, "run", "--variant", "turbine", "--areas", "AT", "--output-dir", str(tmp_path))
    assert result.exit_code == 3


def test_too_many_steps_exit_code(runner, tmp_path):
    result = _invoke(runner, "run", "--steps", "40000", "--areas", "AT", "--output-dir", str(tmp_path))
    assert result.exit_code == 6


def test_missing_scenario_exit_code(runner, tmp_path):
    result = _invoke(runner, "run", "--scenario", str(tmp_path / "none.csv"), "--output-dir", str(tmp_path))
    assert result.exit_code == 3


def test_missing_log_exit_code(runner, tmp_path):
    assert _invoke(runner, "report", str(tmp_path / "run_none.csv")).exit_code == 9


def test_run_seed_seeds_the_synthetic_scenario(runner, tmp_path):
    def cost(*args):
        result = _invoke(
            runner, "run", "--controller", "idle", "--steps", "3", "--areas", "AT",
            "--output-dir", str(tmp_path), *args,
        )
        assert result.exit_code == 0, result.output
        return re.search(r"cumulative_cost: (\S+)", result.output).group(1)

    assert cost("--seed", "1") == cost("--synthetic-seed", "1")
    assert cost("--seed", "1") != cost("--seed", "2")
