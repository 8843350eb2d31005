"""
Pydantic schemas for scenario data.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from gridbench.app.models.network import ISO_CODES
from gridbench.app.models.state import NetworkExogenous

HOURS_PER_DAY = 24


class SeriesKind(str, Enum):
    """Hourly series kinds present for every area."""
    load_meas = "load_meas"
    load_for = "load_for"
    ren_meas = "ren_meas"
    ren_for = "ren_for"

    @property
    def is_load(self) -> bool:
        return self in (SeriesKind.load_meas, SeriesKind.load_for)


SERIES_KINDS: Tuple[SeriesKind, ...] = tuple(SeriesKind)


class HourlySeries(BaseModel):
    """24 hourly values of one kind for one area; None marks a missing entry."""

    model_config = ConfigDict(frozen=True)

    area: str = Field(..., min_length=2, max_length=2)
    kind: SeriesKind
    values: Tuple[Optional[float], ...] = Field(..., min_length=HOURS_PER_DAY, max_length=HOURS_PER_DAY)

    @field_validator("area")
    @classmethod
    def validate_area(cls, v):
        if v not in ISO_CODES:
            raise ValueError(f"Unknown ISO code: {v}")
        return v

    @field_validator("values")
    @classmethod
    def validate_values(cls, v):
        for value in v:
            if value is not None and not np.isfinite(value):
                raise ValueError("Hourly values must be finite or missing")
        return tuple(v)

    @model_validator(mode="after")
    def check_load_sign(self):
        if self.kind.is_load and any(v is not None and v < 0 for v in self.values):
            raise ValueError(f"{self.area} {self.kind.value}: load values must be nonnegative")
        return self

    @property
    def missing(self) -> List[int]:
        """Zero-based hour positions without a value."""
        return [h for h, v in enumerate(self.values) if v is None]

    @property
    def is_complete(self) -> bool:
        return not self.missing

    def as_array(self) -> np.ndarray:
        return np.array([np.nan if v is None else v for v in self.values], dtype=float)


class Scenario(BaseModel):
    """Hourly load and renewable data plus dispatchable capacities for every area."""

    model_config = ConfigDict(frozen=True)

    area_codes: Tuple[str, ...] = ISO_CODES
    series: Tuple[HourlySeries, ...]
    capacities: Dict[str, float]
    provenance: str = ""
    seed: Optional[int] = None

    @model_validator(mode="after")
    def check_complete(self):
        seen = {(s.area, s.kind) for s in self.series}
        if len(seen) != len(self.series):
            raise ValueError("Duplicate series in scenario")
        expected = {(code, kind) for code in self.area_codes for kind in SERIES_KINDS}
        missing = sorted(expected - seen)
        if missing:
            raise ValueError(f"Missing series: {missing[:4]}")
        extra = seen - expected
        if extra:
            raise ValueError(f"Series for areas outside the network: {sorted(extra)[:4]}")
        for code in self.area_codes:
            if code not in self.capacities:
                raise ValueError(f"No capacity for {code}")
            if self.capacities[code] < 0:
                raise ValueError(f"Negative capacity for {code}")
        return self

    @property
    def n_areas(self) -> int:
        return len(self.area_codes)

    def get(self, area: str, kind: SeriesKind) -> HourlySeries:
        for series in self.series:
            if series.area == area and series.kind == kind:
                return series
        raise KeyError((area, kind))

    def hourly(self, kind: SeriesKind) -> np.ndarray:
        """(24, n_areas) array of one kind, NaN where missing."""
        return np.column_stack([self.get(code, kind).as_array() for code in self.area_codes])

    def capacity_vector(self) -> np.ndarray:
        return np.array([self.capacities[code] for code in self.area_codes], dtype=float)

    def missing_cells(self) -> List[Tuple[str, SeriesKind, int]]:
        return [
            (s.area, s.kind, hour)
            for s in self.series
            for hour in s.missing
        ]

    @property
    def is_complete(self) -> bool:
        return all(s.is_complete for s in self.series)

    def subset(self, codes: Sequence[str]) -> "Scenario":
        keep = set(codes)
        return Scenario(
            area_codes=tuple(codes),
            series=tuple(s for s in self.series if s.area in keep),
            capacities={code: self.capacities[code] for code in codes},
            provenance=self.provenance,
            seed=self.seed,
        )


@dataclass(frozen=True, eq=False)
class StepSignals:
    """
    Per-step deviation signals, each an array of shape (K, n_areas).

    Deviations are taken from the hour-1 value; baselines keep the hour-1
    absolute values per kind.
    """
    area_codes: Tuple[str, ...]
    steps_per_hour: int
    load_meas: np.ndarray
    load_for: np.ndarray
    ren_meas: np.ndarray
    ren_for: np.ndarray
    baselines: Dict[SeriesKind, np.ndarray]

    def __post_init__(self):
        for kind in SERIES_KINDS:
            getattr(self, kind.value).setflags(write=False)

    @property
    def n_steps(self) -> int:
        return self.load_meas.shape[0]

    @property
    def n_areas(self) -> int:
        return len(self.area_codes)

    def of(self, kind: SeriesKind) -> np.ndarray:
        return getattr(self, kind.value)

    def measured(self, k: int) -> NetworkExogenous:
        return NetworkExogenous(d_p_load=self.load_meas[k], d_p_ren=self.ren_meas[k])

    def forecast(self, k: int) -> NetworkExogenous:
        return NetworkExogenous(d_p_load=self.load_for[k], d_p_ren=self.ren_for[k])

    def truncated(self, n_steps: int) -> "StepSignals":
        return StepSignals(
            area_codes=self.area_codes,
            steps_per_hour=self.steps_per_hour,
            load_meas=self.load_meas[:n_steps],
            load_for=self.load_for[:n_steps],
            ren_meas=self.ren_meas[:n_steps],
            ren_for=self.ren_for[:n_steps],
            baselines=self.baselines,
        )

    def to_frame(self) -> pd.DataFrame:
        """Long-format frame with columns k, iso, d_load_meas, d_load_for, d_ren_meas, d_ren_for."""
        n_steps, n_areas = self.n_steps, self.n_areas
        return pd.DataFrame(
            {
                "k": np.repeat(np.arange(n_steps), n_areas),
                "iso": np.tile(np.array(self.area_codes, dtype=object), n_steps),
                "d_load_meas": self.load_meas.reshape(-1),
                "d_load_for": self.load_for.reshape(-1),
                "d_ren_meas": self.ren_meas.reshape(-1),
                "d_ren_for": self.ren_for.reshape(-1),
            }
        )

    @classmethod
    def zeros(cls, area_codes: Sequence[str], n_steps: int, steps_per_hour: int = 1440) -> "StepSignals":
        shape = (n_steps, len(area_codes))
        return cls(
            area_codes=tuple(area_codes),
            steps_per_hour=steps_per_hour,
            load_meas=np.zeros(shape),
            load_for=np.zeros(shape),
            ren_meas=np.zeros(shape),
            ren_for=np.zeros(shape),
            baselines={kind: np.zeros(len(area_codes)) for kind in SERIES_KINDS},
        )
