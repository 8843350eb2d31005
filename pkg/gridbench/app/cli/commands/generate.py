"""
Synthetic scenario generation.
"""

import click

from gridbench.app.cli.commands import parse_areas
from gridbench.app.models.network import ISO_CODES
from gridbench.app.services.scenario_service import write_scenario
from gridbench.app.utils.seeder import synthetic_scenario


@click.command()
@click.option("--seed", type=int, default=0, show_default=True, help="Random seed.")
@click.option("--profile", type=click.Choice(["calm", "volatile"]), default="calm", show_default=True)
@click.option("--areas", default=None, help="Comma-separated ISO codes (default: all 26).")
@click.option("-o", "--output", type=click.Path(dir_okay=False), required=True, help="Scenario CSV to write.")
def generate(seed, profile, areas, output):
    """Write a synthetic scenario CSV."""
    scenario = synthetic_scenario(seed, profile, parse_areas(areas) or ISO_CODES)
    path = write_scenario(scenario, output)
    click.echo(f"wrote {path} ({scenario.n_areas} areas, seed {seed}, profile {profile})")
