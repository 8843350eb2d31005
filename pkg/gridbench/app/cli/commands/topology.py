"""
Export of the embedded tie-line topology.
"""

import click

from gridbench.app.models.topology import build_eea_topology
from gridbench.app.utils.files import atomic_write_text


@click.command()
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None, help="Edge CSV (default: stdout).")
@click.option("--gain", type=float, default=1.0, show_default=True, help="Uniform line gain k.")
def topology(output, gain):
    """Export the tie-line edge list."""
    topo = build_eea_topology(k=gain)
    text = topo.to_edge_csv()
    if output:
        atomic_write_text(output, text)
        click.echo(f"wrote {output} ({topo.n_edges} edges)")
    else:
        click.echo(text, nl=False)
