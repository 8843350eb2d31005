"""
Scenario validation with a repair preview.
"""

import click

from gridbench.app.cli.commands import parse_areas
from gridbench.app.models.network import ISO_CODES, default_params
from gridbench.app.services.scenario_service import (
    export_step_signals,
    interpolate_to_steps,
    validate_scenario,
)


@click.command()
@click.argument("scenario", type=click.Path(dir_okay=False))
@click.option("--areas", default=None, help="Comma-separated ISO codes (default: all 26).")
@click.option("--export-signals", type=click.Path(dir_okay=False), default=None, help="Also write per-step deviations.")
@click.option("--tau", type=float, default=2.5, show_default=True, help="Sampling time for --export-signals [s].")
def validate(scenario, areas, export_signals, tau):
    """Check a scenario CSV against the schema."""
    result = validate_scenario(scenario, parse_areas(areas) or ISO_CODES)
    click.echo(f"{scenario}: {result.scenario.n_areas} areas, {result.issues} missing entries")
    for line in result.repair_preview():
        click.echo(f"  {line}")
    if export_signals:
        params = default_params(result.repaired.area_codes).with_tau(tau)
        signals = interpolate_to_steps(result.repaired, params)
        export_step_signals(signals, export_signals)
        click.echo(f"wrote {export_signals} ({signals.n_steps} steps)")
