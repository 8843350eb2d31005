"""
Metrics of a finished run.
"""

import click

from gridbench.app.services.simulation_service import format_summary, metrics, params_for_log, read_run_log


@click.command()
@click.argument("log_path", type=click.Path(dir_okay=False))
@click.option("--json", "as_json", is_flag=True, help="Print the metrics as JSON.")
def report(log_path, as_json):
    """Recompute and print the metrics of a run log."""
    log, cfg = read_run_log(log_path)
    result = metrics(log, params_for_log(cfg))
    if as_json:
        click.echo(result.model_dump_json(indent=2))
    else:
        click.echo(format_summary(result, log), nl=False)
