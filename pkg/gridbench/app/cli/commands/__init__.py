"""
CLI subcommands and the options they share.
"""

from typing import Optional, Tuple

import click

from gridbench.app.core.config import settings

output_dir_option = click.option(
    "--output-dir",
    type=click.Path(file_okay=False),
    envvar="GRIDBENCH_OUTPUT_DIR",
    default=settings.OUTPUT_DIR,
    show_default=True,
    help="Directory for output files (env GRIDBENCH_OUTPUT_DIR).",
)


def parse_areas(value: Optional[str]) -> Optional[Tuple[str, ...]]:
    """Comma-separated ISO codes, or None."""
    if not value:
        return None
    return tuple(code.strip().upper() for code in value.split(",") if code.strip())
