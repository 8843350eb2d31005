"""
Pydantic schemas for run configuration and run results.
"""

import hashlib
import json
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from gridbench.app.core.errors import ConfigurationError
from gridbench.app.models.network import ISO_CODES, ModelVariant, TurbineParams

CONFIG_HASH_LENGTH = 12

# Fields that do not change the trajectory and stay out of the hash
_HASH_EXCLUDE = {"output_dir", "workers"}


class MpcConfig(BaseModel):
    """Horizon, weights and solver settings of the MPC controllers."""

    model_config = ConfigDict(frozen=True)

    horizon: int = Field(default=30, ge=1)
    r_weights: Tuple[float, float, float] = (100.0, 10.0, 1.0)
    q_weights: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    tol_prim: float = Field(default=1e-6, gt=0)
    tol_dual: float = Field(default=1e-6, gt=0)
    max_iter: int = Field(default=100, ge=1)
    soften: bool = False
    soft_penalty: float = Field(default=1e6, gt=0)
    warm_start: bool = True

    @field_validator("r_weights", "q_weights")
    @classmethod
    def validate_weights(cls, v):
        if any(w < 0 for w in v):
            raise ValueError("Weights must be nonnegative")
        return tuple(float(w) for w in v)


class SyntheticScenarioRef(BaseModel):
    """Reference to a generated scenario instead of a file; without a seed the run seed is used."""

    model_config = ConfigDict(frozen=True)

    seed: Optional[int] = None
    profile: Literal["calm", "volatile"] = "calm"


class PredictionMismatch(BaseModel):
    """Multipliers applied to the controller's copy of the rotating-mass constants."""

    model_config = ConfigDict(frozen=True)

    t_p: float = Field(default=1.0, gt=0)
    k_p: float = Field(default=1.0, gt=0)


class RunConfig(BaseModel):
    """Everything needed to reproduce one closed-loop run."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    scenario: Optional[str] = None
    synthetic: Optional[SyntheticScenarioRef] = None
    controller: str = "centralized"
    variant: ModelVariant = ModelVariant.linear
    steps: int = Field(default=1440, ge=1)
    tau: float = Field(default=2.5, gt=0)
    seed: int = 0
    areas: Optional[Tuple[str, ...]] = None
    mpc: MpcConfig = MpcConfig()
    turbine: TurbineParams = TurbineParams()
    initial_storage_fraction: float = Field(default=0.0, ge=0, le=1)
    prediction_mismatch: PredictionMismatch = PredictionMismatch()
    workers: Optional[int] = Field(default=None, ge=1)
    output_dir: Optional[str] = None

    @field_validator("areas")
    @classmethod
    def validate_areas(cls, v):
        if v is None:
            return v
        unknown = [code for code in v if code not in ISO_CODES]
        if unknown:
            raise ValueError(f"Unknown ISO codes: {unknown}")
        if not v or len(set(v)) != len(v):
            raise ValueError("areas must be a nonempty list of distinct ISO codes")
        return tuple(v)

    @model_validator(mode="after")
    def check_scenario_source(self):
        if self.scenario is None and self.synthetic is None:
            raise ValueError("Either scenario or synthetic must be given")
        if self.scenario is not None and self.synthetic is not None:
            raise ValueError("scenario and synthetic are mutually exclusive")
        return self

    @property
    def area_codes(self) -> Tuple[str, ...]:
        return self.areas if self.areas is not None else ISO_CODES

    @property
    def synthetic_seed(self) -> Optional[int]:
        """Seed of the synthetic scenario: its own if given, else the run seed."""
        if self.synthetic is None:
            return None
        return self.synthetic.seed if self.synthetic.seed is not None else self.seed

    def config_hash(self) -> str:
        """Short sha256 of the canonical JSON of the result-affecting fields."""
        payload = self.model_dump(mode="json", exclude=_HASH_EXCLUDE)
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:CONFIG_HASH_LENGTH]

    def run_name(self) -> str:
        return f"run_{self.controller}_{self.variant.value}_{self.config_hash()}"

    @classmethod
    def from_file(cls, path: Path, **overrides) -> "RunConfig":
        """Load a JSON config and apply non-None overrides."""
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"Config file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Config file {path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigurationError(f"Config file {path} must hold a JSON object")
        return cls.from_dict(data, **overrides)

    @classmethod
    def from_dict(cls, data: dict, **overrides) -> "RunConfig":
        merged = dict(data)
        for key, value in overrides.items():
            if value is None:
                continue
            if key in ("horizon",):
                merged["mpc"] = {**merged.get("mpc", {}), key: value}
            elif key == "scenario":
                merged["scenario"] = value
                merged.pop("synthetic", None)
            else:
                merged[key] = value
        try:
            return cls.model_validate(merged)
        except ValueError as e:
            raise ConfigurationError(f"Invalid run configuration: {e}") from e


class MetricsReport(BaseModel):
    """Benchmark metrics of one closed-loop run."""

    controller: str
    variant: ModelVariant
    steps: int
    tau: float
    config_hash: str = ""
    cumulative_cost: float
    wall_time_mean: float
    wall_time_max: float
    wall_time_total: float
    time_outside_band: Dict[str, float]
    avg_excursion_duration: Dict[str, float]
    violations_by_kind: Dict[str, int]
    control_effort: Dict[str, float]
    mean_storage: Dict[str, float]
    mode_switches: Dict[str, int]
    softened_steps: int = 0
    non_optimal_steps: int = 0
    areas_outside_band: List[str] = Field(default_factory=list)

    @property
    def total_time_outside_band(self) -> float:
        return float(sum(self.time_outside_band.values()))

    @property
    def total_violations(self) -> int:
        return int(sum(self.violations_by_kind.values()))
