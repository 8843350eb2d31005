"""
Closed-loop simulation runs.
"""

from pathlib import Path

import click

from gridbench.app.cli.commands import output_dir_option, parse_areas
from gridbench.app.models.network import ModelVariant
from gridbench.app.schemas.run import RunConfig
from gridbench.app.services.simulation_service import RunArtifacts, metrics, prepare_run, run_closed_loop


def build_run_config(config, **flags) -> RunConfig:
    """Run configuration from an optional JSON file with command-line overrides."""
    synthetic_seed = flags.pop("synthetic_seed")
    profile = flags.pop("profile")
    overrides = {key: value for key, value in flags.items() if value is not None}
    if synthetic_seed is not None or profile is not None:
        overrides["synthetic"] = {"seed": synthetic_seed, "profile": profile or "calm"}
    data = {}
    if config:
        data = RunConfig.from_file(Path(config)).model_dump(mode="json", exclude_none=True)
    if "synthetic" in overrides:
        data.pop("scenario", None)
        overrides.pop("scenario", None)
    elif "scenario" in overrides:
        data.pop("synthetic", None)
    if "scenario" not in data and "synthetic" not in data and not {"scenario", "synthetic"} & set(overrides):
        data["synthetic"] = {"profile": "calm"}
    return RunConfig.from_dict(data, **overrides)


@click.command()
@click.option("-c", "--config", type=click.Path(dir_okay=False), default=None, help="Run configuration JSON.")
@click.option("--scenario", type=click.Path(dir_okay=False), default=None, help="Scenario CSV.")
@click.option("--synthetic-seed", type=int, default=None, help="Use a synthetic scenario with this seed.")
@click.option("--profile", type=click.Choice(["calm", "volatile"]), default=None, help="Synthetic profile.")
@click.option("--controller", default=None, help="Registered controller name.")
@click.option("--variant", type=click.Choice([v.value for v in ModelVariant]), default=None, help="Plant model variant.")
@click.option("--steps", type=int, default=None, help="Number of steps K.")
@click.option("--horizon", type=int, default=None, help="Prediction horizon N.")
@click.option("--tau", type=float, default=None, help="Sampling time [s].")
@click.option("--seed", type=int, default=None, help="Run seed; also seeds a synthetic scenario that has no seed of its own.")
@click.option("--areas", default=None, help="Comma-separated ISO codes (default: all 26).")
@click.option("--workers", type=int, default=None, help="Threads for per-area solves.")
@output_dir_option
def run(config, scenario, synthetic_seed, profile, controller, variant, steps, horizon, tau, seed, areas, workers, output_dir):
    """Run a closed-loop simulation and write logs and a summary."""
    cfg = build_run_config(
        config,
        scenario=scenario,
        synthetic_seed=synthetic_seed,
        profile=profile,
        controller=controller,
        variant=variant,
        steps=steps,
        horizon=horizon,
        tau=tau,
        seed=seed,
        areas=parse_areas(areas),
        workers=workers,
    )
    output_dir = Path(cfg.output_dir or output_dir)
    setup = prepare_run(cfg)
    log = run_closed_loop(cfg, output_dir=output_dir, setup=setup)
    report = metrics(log, setup.plant)
    artifacts = RunArtifacts.for_run(output_dir, cfg.run_name())
    click.echo(f"log: {artifacts.trajectory}")
    click.echo(f"summary: {artifacts.summary}")
    click.echo(f"steps: {len(log)}")
    click.echo(f"cumulative_cost: {report.cumulative_cost:.17g}")
    click.echo(f"time_outside_band_total_s: {report.total_time_outside_band:g}")
    click.echo(f"wall_time_total_s: {report.wall_time_total:.3f}")
