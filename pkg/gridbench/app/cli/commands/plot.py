"""
Static figures of run logs and input data.
"""

from pathlib import Path

import click

from gridbench.app.cli.commands import parse_areas
from gridbench.app.core.errors import ConfigurationError
from gridbench.app.models.network import ISO_CODES, default_params
from gridbench.app.services.report_service import plot_run, plot_signals
from gridbench.app.services.scenario_service import interpolate_to_steps, load_scenario, repair_scenario
from gridbench.app.services.simulation_service import read_run_log


@click.command()
@click.argument("log_path", type=click.Path(dir_okay=False), required=False)
@click.option("--scenario", type=click.Path(dir_okay=False), default=None, help="Also plot this scenario's signals.")
@click.option("--areas", default=None, help="Comma-separated ISO codes of the scenario (default: all 26).")
@click.option("--tau", type=float, default=2.5, show_default=True, help="Sampling time for scenario signals [s].")
@click.option("--output-dir", type=click.Path(file_okay=False), default=None, help="Figure directory (default: next to the log).")
def plot(log_path, scenario, areas, tau, output_dir):
    """Render SVG charts of a run log and optionally of scenario signals."""
    if not log_path and not scenario:
        raise ConfigurationError("Give a run log, --scenario, or both")
    written = []
    if log_path:
        log, _ = read_run_log(log_path)
        target = Path(output_dir) if output_dir else Path(log_path).parent
        written += plot_run(log, target, stem=Path(log_path).stem)
    if scenario:
        data = repair_scenario(load_scenario(scenario, parse_areas(areas) or ISO_CODES))
        signals = interpolate_to_steps(data, default_params(data.area_codes).with_tau(tau))
        target = Path(output_dir) if output_dir else Path(scenario).parent
        written += plot_signals(signals, target, stem=Path(scenario).stem)
    for path in written:
        click.echo(f"wrote {path}")
