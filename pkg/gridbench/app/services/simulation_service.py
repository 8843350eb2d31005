"""
Closed-loop simulation, run logs and benchmark metrics.

Row k of a run log stores the input u(k) applied at step k and the state
x(k+1) it produced; x(0) is kept separately. The trajectory CSV is streamed
to disk while the loop runs and holds deterministic columns only; wall
times go to a separate timing file.
"""

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from gridbench.app.core.config import settings
from gridbench.app.core.errors import (
    ConfigurationError,
    ControllerContractError,
    RunLogError,
    ScenarioTooShortError,
)
from gridbench.app.core.logging_config import get_logger
from gridbench.app.models.constraints import D_F_LIMIT, check_violations, constraint_set
from gridbench.app.models.network import ModelVariant, NetworkParams, default_params
from gridbench.app.models.state import (
    AUGMENTED_STATE_FIELDS,
    BASE_STATE_FIELDS,
    INPUT_FIELDS,
    TURBINE_STATE_FIELDS,
    NetworkInput,
    NetworkState,
)
from gridbench.app.models.topology import Topology, build_eea_topology, tie_power
from gridbench.app.schemas.run import MetricsReport, MpcConfig, RunConfig
from gridbench.app.schemas.scenario import HOURS_PER_DAY, Scenario, SeriesKind, StepSignals
from gridbench.app.services.controllers import (
    Controller,
    ControllerContext,
    controller_class,
    create_controller,
)
from gridbench.app.services.dynamics_service import advance, initial_state
from gridbench.app.services.mpc_service import splice_exogenous
from gridbench.app.services.scenario_service import interpolate_to_steps, load_scenario, repair_scenario
from gridbench.app.utils.files import atomic_write_text, atomic_writer
from gridbench.app.utils.seeder import synthetic_scenario

logger = get_logger(__name__)

# Absorbs solver round-off at an active frequency bound
BAND_TOLERANCE = 1e-9
MODE_SWITCH_TOLERANCE = 1e-9
FLOAT_FORMAT = ".17g"


def variant_state_fields(variant: ModelVariant) -> Tuple[str, ...]:
    if variant == ModelVariant.augmented:
        return BASE_STATE_FIELDS + AUGMENTED_STATE_FIELDS
    if variant == ModelVariant.turbine:
        return BASE_STATE_FIELDS + TURBINE_STATE_FIELDS
    return BASE_STATE_FIELDS


def stage_cost(x: NetworkState, u: NetworkInput, cfg: Optional[MpcConfig] = None) -> float:
    """x'Rx + u'Qu with per-area diagonal weights on the base states and the inputs."""
    cfg = cfg or MpcConfig()
    if x.n_areas != u.n_areas:
        raise ConfigurationError(f"State has {x.n_areas} areas, input {u.n_areas}")
    r = np.asarray(cfg.r_weights)
    q = np.asarray(cfg.q_weights)
    states = np.column_stack([getattr(x, name) for name in BASE_STATE_FIELDS])
    inputs = np.column_stack([getattr(u, name) for name in INPUT_FIELDS])
    return float(np.sum(states ** 2 * r) + np.sum(inputs ** 2 * q))


@dataclass(eq=False)
class RunLog:
    """
    Per-step trajectory of one closed-loop run.

    states and inputs map field names to (K, n_areas) arrays.
    """
    area_codes: Tuple[str, ...]
    controller: str
    variant: ModelVariant
    tau: float
    initial_state: NetworkState
    states: Dict[str, np.ndarray]
    inputs: Dict[str, np.ndarray]
    tie_power: np.ndarray
    stage_costs: np.ndarray
    wall_times: np.ndarray
    iterations: np.ndarray
    open_loop_costs: np.ndarray
    softened: np.ndarray
    statuses: Tuple[str, ...]
    config_hash: str = ""
    mpc: MpcConfig = field(default_factory=MpcConfig)

    def __len__(self) -> int:
        return self.stage_costs.shape[0]

    @property
    def n_areas(self) -> int:
        return len(self.area_codes)

    @property
    def cumulative_costs(self) -> np.ndarray:
        return np.cumsum(self.stage_costs)

    @property
    def cumulative_cost(self) -> float:
        return math.fsum(self.stage_costs.tolist())

    @property
    def total_wall_time(self) -> float:
        return math.fsum(self.wall_times.tolist())

    def state(self, k: int) -> NetworkState:
        """State x(k+1) stored in row k."""
        return NetworkState(**{name: values[k] for name, values in self.states.items()})

    def input(self, k: int) -> NetworkInput:
        return NetworkInput(**{name: self.inputs[name][k] for name in INPUT_FIELDS})


def trajectory_columns(variant: ModelVariant, area_codes: Sequence[str]) -> List[str]:
    """Header of the trajectory CSV: one row per step, one block of columns per quantity."""
    columns = ["k", "time_s", "stage_cost", "cumulative_cost", "softened", "status"]
    for name in variant_state_fields(variant):
        columns.extend(f"x_{name}_{code}" for code in area_codes)
    for name in INPUT_FIELDS:
        columns.extend(f"u_{name}_{code}" for code in area_codes)
    columns.extend(f"p_tie_{code}" for code in area_codes)
    columns.extend(f"violations_{code}" for code in area_codes)
    return columns


TIMING_COLUMNS = ("k", "wall_time_s", "iterations", "open_loop_cost")


@dataclass(frozen=True)
class RunArtifacts:
    """Paths written by one run."""
    trajectory: Path
    timing: Path
    summary: Path
    metadata: Path
    metrics: Path

    @classmethod
    def for_run(cls, output_dir: Path, run_name: str) -> "RunArtifacts":
        output_dir = Path(output_dir)
        return cls(
            trajectory=output_dir / f"{run_name}.csv",
            timing=output_dir / f"{run_name}_timing.csv",
            summary=output_dir / f"{run_name}_summary.txt",
            metadata=output_dir / f"{run_name}_meta.json",
            metrics=output_dir / f"{run_name}_metrics.json",
        )

    @classmethod
    def from_trajectory(cls, path: Path) -> "RunArtifacts":
        path = Path(path)
        return cls.for_run(path.parent, path.stem)


def _fmt(value: float) -> str:
    return format(float(value), FLOAT_FORMAT)


def load_run_scenario(cfg: RunConfig) -> Scenario:
    """Scenario named by the run configuration, repaired and restricted to its areas."""
    if cfg.synthetic is not None:
        return synthetic_scenario(cfg.synthetic_seed, cfg.synthetic.profile, cfg.area_codes)
    return repair_scenario(load_scenario(cfg.scenario, cfg.area_codes))


@dataclass(eq=False)
class RunSetup:
    """Everything the closed loop needs, assembled from a run configuration."""
    cfg: RunConfig
    scenario: Scenario
    topo: Topology
    plant: NetworkParams
    signals: StepSignals
    controller: Controller


def prepare_run(cfg: RunConfig, scenario: Optional[Scenario] = None) -> RunSetup:
    """
    Build the plant, the signals and the controller for a run.

    The controller gets its own copy of the network parameters with the
    prediction mismatch factors applied.
    """
    controller_class(cfg.controller)
    if scenario is None:
        scenario = load_run_scenario(cfg)
    codes = scenario.area_codes
    plant = default_params(codes).with_capacities(scenario.capacity_vector()).with_tau(cfg.tau)
    if cfg.variant == ModelVariant.turbine:
        cfg.turbine.check_against(plant)
    limit = HOURS_PER_DAY * int(plant.steps_per_hour)
    if cfg.steps > limit:
        raise ScenarioTooShortError(cfg.steps, limit)

    topo = build_eea_topology(codes=codes)
    signals = interpolate_to_steps(scenario, plant, n_steps=cfg.steps + cfg.mpc.horizon)
    mismatch = cfg.prediction_mismatch
    context = ControllerContext(
        topo=topo,
        params=plant.scaled(mismatch.t_p, mismatch.k_p),
        variant=cfg.variant,
        mpc=cfg.mpc,
        turbine=cfg.turbine if cfg.variant == ModelVariant.turbine else None,
        workers=cfg.workers or settings.WORKERS,
    )
    controller = create_controller(cfg.controller, context)
    return RunSetup(cfg=cfg, scenario=scenario, topo=topo, plant=plant, signals=signals, controller=controller)


def run_closed_loop(
    cfg: RunConfig,
    output_dir: Optional[Path] = None,
    scenario: Optional[Scenario] = None,
    setup: Optional[RunSetup] = None,
) -> RunLog:
    """
    Drive the plant for cfg.steps steps under the configured controller.

    The plant only ever sees measured signals. With output_dir the
    trajectory is streamed to disk and the timing, summary, metadata and
    metrics files are written at the end.
    """
    setup = setup or prepare_run(cfg, scenario)
    plant, topo, signals, controller = setup.plant, setup.topo, setup.signals, setup.controller
    n, K = plant.n_areas, cfg.steps
    codes = plant.area_codes
    fields = variant_state_fields(cfg.variant)
    sets = [constraint_set(area) for area in plant.areas]
    augmented = cfg.variant == ModelVariant.augmented

    baseline_load = signals.baselines[SeriesKind.load_meas]
    baseline_ren = signals.baselines[SeriesKind.ren_meas]
    x = initial_state(cfg.variant, plant, cfg.initial_storage_fraction, baseline_load, baseline_ren)
    x0 = x

    states = {name: np.empty((K, n)) for name in fields}
    inputs = {name: np.empty((K, n)) for name in INPUT_FIELDS}
    ties = np.empty((K, n))
    stage_costs = np.empty(K)
    wall_times = np.empty(K)
    iterations = np.zeros(K, dtype=int)
    open_loop = np.zeros(K)
    softened = np.zeros(K, dtype=bool)
    statuses: List[str] = []

    artifacts = None
    if output_dir is not None:
        artifacts = RunArtifacts.for_run(Path(output_dir), cfg.run_name())
    progress = settings.PROGRESS_INTERVAL
    turbine = cfg.turbine if cfg.variant == ModelVariant.turbine else None

    controller.reset()
    logger.info("Closed loop started", controller=cfg.controller, variant=cfg.variant.value, steps=K, areas=n)

    def loop(writer) -> float:
        nonlocal x
        cumulative = 0.0
        for k in range(K):
            window = splice_exogenous(k, signals, cfg.mpc.horizon)
            started = time.perf_counter()
            u, diagnostics = controller.observe(k, x, window)
            wall_times[k] = time.perf_counter() - started

            if not isinstance(u, NetworkInput) or u.n_areas != n:
                raise ControllerContractError(k, f"controller must return a NetworkInput for {n} areas")
            if not u.is_finite():
                raise ControllerContractError(k, "controller returned a non-finite input")

            x = advance(cfg.variant, x, u, signals.measured(k), topo, plant, turbine)
            cost = stage_cost(x, u, cfg.mpc)
            cumulative += cost
            tie = tie_power(x.d_delta, topo)
            violations = check_violations(x, u, sets, include_total_dispatch=augmented)
            counts = np.zeros(n, dtype=int)
            for violation in violations:
                counts[violation.area] += 1

            for name in fields:
                states[name][k] = getattr(x, name)
            for name in INPUT_FIELDS:
                inputs[name][k] = getattr(u, name)
            ties[k] = tie
            stage_costs[k] = cost
            iterations[k] = diagnostics.iterations
            open_loop[k] = diagnostics.open_loop_cost
            softened[k] = diagnostics.softened
            statuses.append(diagnostics.status)

            if writer is not None:
                row = [str(k), _fmt((k + 1) * plant.tau), _fmt(cost), _fmt(cumulative),
                       str(int(diagnostics.softened)), diagnostics.status]
                for name in fields:
                    row.extend(_fmt(v) for v in getattr(x, name))
                for name in INPUT_FIELDS:
                    row.extend(_fmt(v) for v in getattr(u, name))
                row.extend(_fmt(v) for v in tie)
                row.extend(str(c) for c in counts)
                writer.writerow(row)

            if (k + 1) % progress == 0:
                logger.info("Closed loop progress", step=k + 1, steps=K, cumulative_cost=cumulative)
        return cumulative

    if artifacts is not None:
        with atomic_writer(artifacts.trajectory, keep_partial=True) as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(trajectory_columns(cfg.variant, codes))
            loop(writer)
    else:
        loop(None)

    log = RunLog(
        area_codes=codes,
        controller=cfg.controller,
        variant=cfg.variant,
        tau=plant.tau,
        initial_state=x0,
        states=states,
        inputs=inputs,
        tie_power=ties,
        stage_costs=stage_costs,
        wall_times=wall_times,
        iterations=iterations,
        open_loop_costs=open_loop,
        softened=softened,
        statuses=tuple(statuses),
        config_hash=cfg.config_hash(),
        mpc=cfg.mpc,
    )
    report = metrics(log, plant)
    logger.info(
        "Closed loop finished",
        cumulative_cost=report.cumulative_cost,
        wall_time_total=report.wall_time_total,
        areas_outside_band=len(report.areas_outside_band),
    )
    if artifacts is not None:
        write_run_artifacts(log, report, cfg, artifacts)
    return log


def _excursions(outside: np.ndarray) -> int:
    """Number of maximal runs of True."""
    if outside.size == 0:
        return 0
    starts = outside & ~np.concatenate([[False], outside[:-1]])
    return int(starts.sum())


def _mode_switches(net: np.ndarray) -> int:
    signs = np.sign(np.where(np.abs(net) > MODE_SWITCH_TOLERANCE, net, 0.0))
    signs = signs[signs != 0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def metrics(log: RunLog, params: NetworkParams) -> MetricsReport:
    """Benchmark metrics of a run log; simulated time is counted as steps times tau."""
    if len(log) == 0:
        raise RunLogError("Run log is empty")
    codes = log.area_codes
    sets = [constraint_set(area) for area in params.areas]
    augmented = log.variant == ModelVariant.augmented

    outside = np.abs(log.states["d_f"]) > D_F_LIMIT + BAND_TOLERANCE
    time_outside: Dict[str, float] = {}
    avg_excursion: Dict[str, float] = {}
    for i, code in enumerate(codes):
        total = float(outside[:, i].sum()) * log.tau
        count = _excursions(outside[:, i])
        time_outside[code] = total
        avg_excursion[code] = total / count if count else 0.0

    violations: Dict[str, int] = {}
    for k in range(len(log)):
        report = check_violations(log.state(k), log.input(k), sets, include_total_dispatch=augmented)
        for kind, count in report.by_kind().items():
            violations[kind] = violations.get(kind, 0) + count

    effort = sum(log.inputs[name] ** 2 for name in INPUT_FIELDS).sum(axis=0)
    net_storage = log.inputs["p_c"] - log.inputs["p_d"]
    return MetricsReport(
        controller=log.controller,
        variant=log.variant,
        steps=len(log),
        tau=log.tau,
        config_hash=log.config_hash,
        cumulative_cost=log.cumulative_cost,
        wall_time_mean=float(np.mean(log.wall_times)),
        wall_time_max=float(np.max(log.wall_times)),
        wall_time_total=log.total_wall_time,
        time_outside_band=time_outside,
        avg_excursion_duration=avg_excursion,
        violations_by_kind=dict(sorted(violations.items())),
        control_effort={code: float(effort[i]) for i, code in enumerate(codes)},
        mean_storage={code: float(np.mean(log.states["e"][:, i])) for i, code in enumerate(codes)},
        mode_switches={code: _mode_switches(net_storage[:, i]) for i, code in enumerate(codes)},
        softened_steps=int(log.softened.sum()),
        non_optimal_steps=sum(1 for s in log.statuses if s != "optimal"),
        areas_outside_band=[code for code in codes if time_outside[code] > 0],
    )


def format_summary(report: MetricsReport, log: Optional[RunLog] = None) -> str:
    """Human-readable summary of a metrics report."""
    lines = [
        f"controller: {report.controller}",
        f"variant: {report.variant.value}",
        f"steps: {report.steps}",
        f"tau_s: {report.tau:g}",
        f"config_hash: {report.config_hash}",
        f"cumulative_cost: {report.cumulative_cost:.17g}",
        f"wall_time_total_s: {report.wall_time_total:.6f}",
        f"wall_time_mean_s: {report.wall_time_mean:.6f}",
        f"wall_time_max_s: {report.wall_time_max:.6f}",
        f"softened_steps: {report.softened_steps}",
        f"non_optimal_steps: {report.non_optimal_steps}",
        f"time_outside_band_total_s: {report.total_time_outside_band:g}",
        f"areas_outside_band: {', '.join(report.areas_outside_band) or 'none'}",
        f"violations_total: {report.total_violations}",
    ]
    for kind, count in report.violations_by_kind.items():
        lines.append(f"  {kind}: {count}")
    lines.append("per_area: iso time_outside_s avg_excursion_s control_effort mean_storage mode_switches")
    for code in report.time_outside_band:
        lines.append(
            f"  {code} {report.time_outside_band[code]:g} {report.avg_excursion_duration[code]:g} "
            f"{report.control_effort[code]:.6g} {report.mean_storage[code]:.6g} {report.mode_switches[code]}"
        )
    if log is not None:
        lines.append("initial_state:")
        for name in log.initial_state.field_names:
            values = " ".join(f"{v:.6g}" for v in getattr(log.initial_state, name))
            lines.append(f"  {name}: {values}")
    return "\n".join(lines) + "\n"


def write_run_artifacts(log: RunLog, report: MetricsReport, cfg: RunConfig, artifacts: RunArtifacts) -> None:
    """Timing CSV, summary, metadata and metrics of a finished run."""
    timing = pd.DataFrame(
        {
            "k": np.arange(len(log)),
            "wall_time_s": log.wall_times,
            "iterations": log.iterations,
            "open_loop_cost": log.open_loop_costs,
        }
    )
    with atomic_writer(artifacts.timing) as handle:
        timing.to_csv(handle, index=False, float_format="%.17g", lineterminator="\n")

    metadata = {
        "config": cfg.model_dump(mode="json"),
        "config_hash": log.config_hash,
        "area_codes": list(log.area_codes),
        "variant": log.variant.value,
        "controller": log.controller,
        "tau": log.tau,
        "initial_state": {
            name: [float(v) for v in getattr(log.initial_state, name)]
            for name in log.initial_state.field_names
        },
    }
    atomic_write_text(artifacts.metadata, json.dumps(metadata, indent=2, sort_keys=True) + "\n")
    atomic_write_text(artifacts.metrics, report.model_dump_json(indent=2) + "\n")
    atomic_write_text(artifacts.summary, format_summary(report, log))
    logger.info("Run artifacts written", trajectory=str(artifacts.trajectory), summary=str(artifacts.summary))


def read_run_log(path) -> Tuple[RunLog, RunConfig]:
    """Read a trajectory CSV together with its metadata and timing files."""
    artifacts = RunArtifacts.from_trajectory(Path(path))
    if not artifacts.trajectory.exists():
        raise RunLogError(f"Run log not found: {artifacts.trajectory}")
    if not artifacts.metadata.exists():
        raise RunLogError(f"Run metadata not found: {artifacts.metadata}")
    try:
        metadata = json.loads(artifacts.metadata.read_text(encoding="utf-8"))
        cfg = RunConfig.model_validate(metadata["config"])
        codes = tuple(metadata["area_codes"])
        variant = ModelVariant(metadata["variant"])
        x0 = NetworkState(**{name: np.asarray(v, dtype=float) for name, v in metadata["initial_state"].items()})
    except (ValueError, KeyError, TypeError) as e:
        raise RunLogError(f"Run metadata {artifacts.metadata} is corrupt: {e}") from e

    try:
        frame = pd.read_csv(artifacts.trajectory, keep_default_na=False, dtype={"status": str})
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise RunLogError(f"Run log {artifacts.trajectory} cannot be parsed: {e}") from e
    expected = trajectory_columns(variant, codes)
    if list(frame.columns) != expected:
        raise RunLogError(f"Run log {artifacts.trajectory} has unexpected columns")
    if len(frame) == 0:
        raise RunLogError(f"Run log {artifacts.trajectory} has no rows")
    if not np.array_equal(frame["k"].to_numpy(), np.arange(len(frame))):
        raise RunLogError(f"Run log {artifacts.trajectory} has missing or reordered steps")

    def block(prefix: str) -> np.ndarray:
        try:
            return frame[[f"{prefix}_{code}" for code in codes]].to_numpy(dtype=float)
        except ValueError as e:
            raise RunLogError(f"Run log {artifacts.trajectory} holds non-numeric values in {prefix}") from e

    K = len(frame)
    wall_times = np.zeros(K)
    iterations = np.zeros(K, dtype=int)
    open_loop = np.zeros(K)
    if artifacts.timing.exists():
        timing = pd.read_csv(artifacts.timing)
        if len(timing) == K:
            wall_times = timing["wall_time_s"].to_numpy(dtype=float)
            iterations = timing["iterations"].to_numpy(dtype=int)
            open_loop = timing["open_loop_cost"].to_numpy(dtype=float)

    log = RunLog(
        area_codes=codes,
        controller=metadata["controller"],
        variant=variant,
        tau=float(metadata["tau"]),
        initial_state=x0,
        states={name: block(f"x_{name}") for name in variant_state_fields(variant)},
        inputs={name: block(f"u_{name}") for name in INPUT_FIELDS},
        tie_power=block("p_tie"),
        stage_costs=frame["stage_cost"].to_numpy(dtype=float),
        wall_times=wall_times,
        iterations=iterations,
        open_loop_costs=open_loop,
        softened=frame["softened"].to_numpy(dtype=int).astype(bool),
        statuses=tuple(frame["status"].astype(str)),
        config_hash=metadata.get("config_hash", ""),
        mpc=cfg.mpc,
    )
    return log, cfg


def params_for_log(cfg: RunConfig) -> NetworkParams:
    """Plant parameters a logged run was simulated with."""
    scenario = load_run_scenario(cfg)
    return default_params(scenario.area_codes).with_capacities(scenario.capacity_vector()).with_tau(cfg.tau)
