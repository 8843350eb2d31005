"""
Command-line interface

Main command group that includes all subcommands.
"""

import sys

import click

from gridbench.app.cli.commands import generate, plot, report, run, topology, validate
from gridbench.app.core.config import settings
from gridbench.app.core.errors import GridBenchError
from gridbench.app.core.logging_config import get_logger, setup_logging

logger = get_logger(__name__)


class GridBenchGroup(click.Group):
    """Command group that maps benchmark errors to their exit codes."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except GridBenchError as e:
            click.echo(f"error: {e}", err=True)
            ctx.exit(e.exit_code)
        except (click.exceptions.ClickException, click.exceptions.Exit, click.exceptions.Abort):
            raise
        except Exception as e:
            logger.exception("Unhandled error", error=str(e))
            click.echo(f"error: {e}", err=True)
            ctx.exit(1)


@click.group(cls=GridBenchGroup)
@click.version_option(settings.APP_VERSION, prog_name="gridbench")
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default=None,
    help="Override GRIDBENCH_LOG_LEVEL.",
)
@click.option("--log-format", type=click.Choice(["json", "text"]), default=None, help="Log rendering.")
@click.option("-v", "--verbose", is_flag=True, help="Shortcut for --log-level DEBUG.")
def cli(log_level, log_format, verbose):
    """Benchmark for load-frequency control of the European electricity network."""
    setup_logging("DEBUG" if verbose else log_level, log_format)


# Register all subcommands
cli.add_command(generate.generate)
cli.add_command(validate.validate)
cli.add_command(run.run)
cli.add_command(report.report)
cli.add_command(plot.plot)
cli.add_command(topology.topology)


def main() -> None:
    sys.exit(cli(standalone_mode=True))
