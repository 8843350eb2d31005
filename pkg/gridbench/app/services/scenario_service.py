"""
Scenario ingestion, repair and interpolation to simulation steps.

Scenario CSV (UTF-8, comma separated):

    iso,kind,p_disp_max,h01,...,h24

One row per (area, kind), kind in {load_meas, load_for, ren_meas, ren_for}.
p_disp_max is repeated on every row of an area and must agree. An empty
hour cell marks a missing value.
"""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from gridbench.app.core.errors import (
    CapacityMismatchError,
    InsufficientDataError,
    MalformedHeaderError,
    NegativeLoadError,
    NonNumericCellError,
    RowCountError,
    ScenarioNotFoundError,
    ScenarioSchemaError,
    UnknownAreaError,
)
from gridbench.app.core.logging_config import get_logger
from gridbench.app.models.network import ISO_CODES, NetworkParams
from gridbench.app.schemas.scenario import (
    HOURS_PER_DAY,
    SERIES_KINDS,
    HourlySeries,
    Scenario,
    SeriesKind,
    StepSignals,
)
from gridbench.app.utils.files import atomic_writer

logger = get_logger(__name__)

HOUR_COLUMNS = tuple(f"h{h:02d}" for h in range(1, HOURS_PER_DAY + 1))
SCENARIO_COLUMNS = ("iso", "kind", "p_disp_max") + HOUR_COLUMNS
STEP_SIGNAL_COLUMNS = ("k", "iso", "d_load_meas", "d_load_for", "d_ren_meas", "d_ren_for")


def _parse_number(text: str, line: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise NonNumericCellError(f"column {column}: '{text}' is not a number", line=line) from None
    if not math.isfinite(value):
        raise NonNumericCellError(f"column {column}: '{text}' is not a finite number", line=line)
    return value


def load_scenario(path, area_codes: Sequence[str] = ISO_CODES) -> Scenario:
    """Read and validate a scenario file; missing hour cells are kept as gaps."""
    path = Path(path)
    if not path.exists():
        raise ScenarioNotFoundError(f"Scenario file not found: {path}")

    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise MalformedHeaderError("file is empty", line=1) from None
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise ScenarioSchemaError(f"cannot parse file: {e}") from e

    header = [c.strip() for c in frame.columns]
    if tuple(header) != SCENARIO_COLUMNS:
        raise MalformedHeaderError(
            f"expected header {','.join(SCENARIO_COLUMNS[:4])},...,h24, got {','.join(header)}",
            line=1,
        )
    frame.columns = header

    wanted = set(area_codes)
    series: List[HourlySeries] = []
    capacities: Dict[str, float] = {}
    capacity_lines: Dict[str, int] = {}
    seen: Dict[Tuple[str, SeriesKind], int] = {}

    for position, row in enumerate(frame.itertuples(index=False)):
        line = position + 2
        record = dict(zip(header, (str(v).strip() for v in row)))
        iso = record["iso"]
        if iso not in ISO_CODES:
            raise UnknownAreaError(f"unknown ISO code '{iso}'", line=line)
        try:
            kind = SeriesKind(record["kind"])
        except ValueError:
            raise ScenarioSchemaError(f"unknown series kind '{record['kind']}'", line=line) from None
        if iso not in wanted:
            continue
        if (iso, kind) in seen:
            raise RowCountError(
                f"duplicate row for {iso} {kind.value} (first on line {seen[(iso, kind)]})",
                line=line,
            )
        seen[(iso, kind)] = line

        capacity = _parse_number(record["p_disp_max"], line, "p_disp_max")
        if capacity < 0:
            raise CapacityMismatchError(f"negative p_disp_max for {iso}", line=line)
        if iso in capacities and capacities[iso] != capacity:
            raise CapacityMismatchError(
                f"p_disp_max for {iso} is {capacity}, line {capacity_lines[iso]} says {capacities[iso]}",
                line=line,
            )
        capacities[iso] = capacity
        capacity_lines.setdefault(iso, line)

        values: List[Optional[float]] = []
        for column in HOUR_COLUMNS:
            text = record[column]
            values.append(None if text == "" else _parse_number(text, line, column))
        if kind.is_load and any(v is not None and v < 0 for v in values):
            raise NegativeLoadError(f"negative load for {iso} {kind.value}", line=line)
        series.append(HourlySeries(area=iso, kind=kind, values=tuple(values)))

    missing_areas = [
        code for code in area_codes if any((code, kind) not in seen for kind in SERIES_KINDS)
    ]
    if missing_areas:
        raise RowCountError(
            f"{len(seen)} rows found, expected {len(area_codes) * len(SERIES_KINDS)}; "
            f"incomplete areas: {', '.join(missing_areas)}"
        )

    scenario = Scenario(
        area_codes=tuple(area_codes),
        series=tuple(series),
        capacities=capacities,
        provenance=f"file:{path.name}",
    )
    logger.info(
        "Scenario loaded",
        path=str(path),
        areas=scenario.n_areas,
        missing_cells=len(scenario.missing_cells()),
    )
    return scenario


def repair_missing(series: HourlySeries) -> HourlySeries:
    """Fill gaps linearly between present neighbours and constantly at the ends."""
    values = series.as_array()
    present = np.flatnonzero(~np.isnan(values))
    if present.size < 2:
        raise InsufficientDataError(
            f"{series.area} {series.kind.value}: {present.size} present entries, at least 2 required"
        )
    if present.size == values.size:
        return series
    hours = np.arange(values.size, dtype=float)
    filled = np.interp(hours, present.astype(float), values[present])
    filled[present] = values[present]
    return series.model_copy(update={"values": tuple(float(v) for v in filled)})


def repair_scenario(scenario: Scenario) -> Scenario:
    """Repair every series with gaps."""
    if scenario.is_complete:
        return scenario
    repaired = tuple(repair_missing(s) for s in scenario.series)
    logger.info("Scenario repaired", cells=len(scenario.missing_cells()))
    return scenario.model_copy(update={"series": repaired})


def interpolate_to_steps(
    scenario: Scenario,
    params: NetworkParams,
    n_steps: Optional[int] = None,
) -> StepSignals:
    """
    Linear interpolation of the hourly data to simulation steps.

    Step k sits k / steps_per_hour hours after hour 1; beyond hour 24 the
    hour-24 value is held. Deviations are taken from the hour-1 value.
    n_steps limits the output to the first steps of the day.
    """
    if not scenario.is_complete:
        raise ScenarioSchemaError("scenario has missing entries; repair it before interpolation")
    steps_per_hour = int(params.steps_per_hour)
    full = HOURS_PER_DAY * steps_per_hour
    count = full if n_steps is None else min(int(n_steps), full)
    positions = np.arange(count, dtype=float) / steps_per_hour
    knots = np.arange(HOURS_PER_DAY, dtype=float)

    arrays: Dict[SeriesKind, np.ndarray] = {}
    baselines: Dict[SeriesKind, np.ndarray] = {}
    for kind in SERIES_KINDS:
        hourly = scenario.hourly(kind)
        baseline = hourly[0].copy()
        values = np.empty((count, scenario.n_areas))
        for i in range(scenario.n_areas):
            values[:, i] = np.interp(positions, knots, hourly[:, i])
        arrays[kind] = values - baseline
        baselines[kind] = baseline

    return StepSignals(
        area_codes=scenario.area_codes,
        steps_per_hour=steps_per_hour,
        load_meas=arrays[SeriesKind.load_meas],
        load_for=arrays[SeriesKind.load_for],
        ren_meas=arrays[SeriesKind.ren_meas],
        ren_for=arrays[SeriesKind.ren_for],
        baselines=baselines,
    )


def _format_cell(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def write_scenario(scenario: Scenario, path) -> Path:
    """Write a scenario in the documented CSV schema."""
    path = Path(path)
    with atomic_writer(path) as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SCENARIO_COLUMNS)
        for code in scenario.area_codes:
            for kind in SERIES_KINDS:
                series = scenario.get(code, kind)
                writer.writerow(
                    [code, kind.value, _format_cell(scenario.capacities[code])]
                    + [_format_cell(v) for v in series.values]
                )
    logger.info("Scenario written", path=str(path))
    return path


def export_step_signals(signals: StepSignals, path) -> Path:
    """Write per-step deviation signals as k, iso, d_load_meas, d_load_for, d_ren_meas, d_ren_for."""
    path = Path(path)
    with atomic_writer(path) as handle:
        signals.to_frame().to_csv(handle, index=False, float_format="%.17g", lineterminator="\n")
    logger.info("Step signals written", path=str(path), steps=signals.n_steps)
    return path


@dataclass
class ValidationResult:
    """Outcome of validating a scenario file."""
    scenario: Scenario
    repaired: Scenario
    missing: List[Tuple[str, SeriesKind, int]] = field(default_factory=list)

    @property
    def issues(self) -> int:
        return len(self.missing)

    def repair_preview(self) -> List[str]:
        lines = []
        for area, kind, hour in self.missing:
            value = self.repaired.get(area, kind).values[hour]
            lines.append(f"{area} {kind.value} {HOUR_COLUMNS[hour]}: missing -> {value:.6g}")
        return lines


def validate_scenario(path, area_codes: Sequence[str] = ISO_CODES) -> ValidationResult:
    """Load a scenario file, check it can be repaired, and list the cells repair would fill."""
    scenario = load_scenario(path, area_codes)
    repaired = repair_scenario(scenario)
    return ValidationResult(scenario=scenario, repaired=repaired, missing=scenario.missing_cells())
