"""
EEA Network Benchmark - Main Entry Point

Closed-loop load-frequency control benchmark on a 26-area model of the
European electricity network.
"""

from gridbench.app.cli.cli import cli, main

__all__ = ["cli", "main"]

if __name__ == "__main__":
    main()
