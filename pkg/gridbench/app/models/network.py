"""
Physical parameters of the electrical areas and of the network.
"""

from enum import Enum
from typing import Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from gridbench.app.core.errors import ConfigurationError

# Area ordering of the embedded tie-line table
ISO_CODES: Tuple[str, ...] = (
    "AT", "BE", "BG", "HR", "CZ", "DK", "EE", "FI", "FR", "DE", "GR", "HU", "IE",
    "IT", "LV", "LT", "NL", "NO", "PL", "PT", "RO", "SK", "SI", "ES", "SE", "CH",
)

N_AREAS = len(ISO_CODES)

# Sampling time above which the turbine extension is not resolved
TURBINE_MAX_TAU = 0.025


class ModelVariant(str, Enum):
    """Plant model variant."""
    linear = "linear"
    pwa_ess = "pwa_ess"
    turbine = "turbine"
    augmented = "augmented"


class AreaId(BaseModel):
    """Electrical area identified by its position and ISO code."""

    model_config = ConfigDict(frozen=True)

    index: int = Field(..., ge=0, lt=N_AREAS)
    iso_code: str = Field(..., min_length=2, max_length=2)

    @model_validator(mode="after")
    def check_bijection(self):
        if ISO_CODES[self.index] != self.iso_code:
            raise ValueError(
                f"ISO code {self.iso_code} does not match area index {self.index}"
            )
        return self

    @classmethod
    def from_iso(cls, iso_code: str) -> "AreaId":
        """Look up an area by ISO code."""
        try:
            return cls(index=ISO_CODES.index(iso_code), iso_code=iso_code)
        except ValueError:
            raise ConfigurationError(f"Unknown ISO code: {iso_code}") from None

    @classmethod
    def from_index(cls, index: int) -> "AreaId":
        """Look up an area by position."""
        return cls(index=index, iso_code=ISO_CODES[index])

    def __str__(self) -> str:
        return self.iso_code


class AreaParams(BaseModel):
    """Equivalent-machine and storage parameters of one area."""

    model_config = ConfigDict(frozen=True)

    t_p: float = Field(default=25.0, gt=0, description="Rotating-mass time constant [s]")
    k_p: float = Field(default=0.05, gt=0, description="Rotating-mass gain [Hz/GW]")
    eta_c: float = Field(default=0.9, gt=0, description="Charge efficiency")
    eta_d: float = Field(default=1.1, gt=0, description="Discharge efficiency")
    p_disp_max: float = Field(default=0.0, ge=0, description="Dispatchable capacity [GW]")

    @property
    def e_max(self) -> float:
        """Storage capacity [GWh], numerically equal to the dispatchable capacity."""
        return self.p_disp_max


class TurbineParams(BaseModel):
    """Time constants and gains of the turbine and storage turbine/pump."""

    model_config = ConfigDict(frozen=True)

    t_t: float = Field(default=2.5, gt=0)
    t_c: float = Field(default=2.5, gt=0)
    t_d: float = Field(default=2.5, gt=0)
    k_t: float = Field(default=1.0, gt=0)
    k_c: float = Field(default=1.0, gt=0)
    k_d: float = Field(default=1.0, gt=0)

    def check_against(self, params: "NetworkParams") -> None:
        """Raise if the time constants or the sampling time are out of range."""
        if params.tau > TURBINE_MAX_TAU:
            raise ConfigurationError(
                f"Turbine model requires tau <= {TURBINE_MAX_TAU} s, got {params.tau}"
            )
        t_p_min = min(area.t_p for area in params.areas)
        for name in ("t_t", "t_c", "t_d"):
            if getattr(self, name) > t_p_min / 10.0:
                raise ConfigurationError(
                    f"Turbine time constant {name}={getattr(self, name)} must be at "
                    f"least 10 times smaller than T_p={t_p_min}"
                )


class NetworkParams(BaseModel):
    """Parameters shared by the whole network."""

    model_config = ConfigDict(frozen=True)

    tau: float = Field(default=2.5, gt=0, description="Sampling time [s]")
    areas: Tuple[AreaParams, ...]
    area_codes: Tuple[str, ...] = ISO_CODES
    delta0: float = Field(default=30.0, description="Angle operating point [deg]")
    f0: float = Field(default=50.0, description="Frequency operating point [Hz]")
    steps_per_hour: Optional[int] = Field(default=None, ge=1)

    @field_validator("delta0")
    @classmethod
    def validate_delta0(cls, v):
        if not 0.0 < v < 90.0:
            raise ValueError("delta0 must lie in (0, 90) degrees")
        return v

    @field_validator("area_codes")
    @classmethod
    def validate_codes(cls, v):
        unknown = [code for code in v if code not in ISO_CODES]
        if unknown:
            raise ValueError(f"Unknown ISO codes: {unknown}")
        if len(set(v)) != len(v):
            raise ValueError("Duplicate ISO codes")
        return tuple(v)

    @model_validator(mode="before")
    @classmethod
    def fill_steps_per_hour(cls, data):
        if isinstance(data, dict) and data.get("steps_per_hour") is None:
            tau = float(data.get("tau", 2.5))
            if tau > 0:
                data = {**data, "steps_per_hour": int(round(3600.0 / tau))}
        return data

    @model_validator(mode="after")
    def check_consistency(self):
        if len(self.areas) != len(self.area_codes):
            raise ValueError(
                f"{len(self.areas)} area parameter sets for {len(self.area_codes)} areas"
            )
        return self

    @property
    def n_areas(self) -> int:
        return len(self.areas)

    def with_capacities(self, capacities: Sequence[float]) -> "NetworkParams":
        """Return a copy with per-area dispatchable capacities set."""
        if len(capacities) != self.n_areas:
            raise ConfigurationError(
                f"{len(capacities)} capacities for {self.n_areas} areas"
            )
        areas = tuple(
            area.model_copy(update={"p_disp_max": float(cap)})
            for area, cap in zip(self.areas, capacities)
        )
        return self.model_copy(update={"areas": areas})

    def with_tau(self, tau: float) -> "NetworkParams":
        """Return a copy with another sampling time and matching steps per hour."""
        return NetworkParams(
            tau=tau,
            areas=self.areas,
            area_codes=self.area_codes,
            delta0=self.delta0,
            f0=self.f0,
        )

    def scaled(self, t_p: float = 1.0, k_p: float = 1.0) -> "NetworkParams":
        """Return a copy with rotating-mass constants multiplied by the given factors."""
        if t_p == 1.0 and k_p == 1.0:
            return self
        areas = tuple(
            area.model_copy(update={"t_p": area.t_p * t_p, "k_p": area.k_p * k_p})
            for area in self.areas
        )
        return self.model_copy(update={"areas": areas})

    def subset(self, codes: Sequence[str]) -> "NetworkParams":
        """Return the parameters restricted to the given areas, in that order."""
        missing = [code for code in codes if code not in self.area_codes]
        if missing:
            raise ConfigurationError(f"Areas not in network: {missing}")
        areas = tuple(self.areas[self.area_codes.index(code)] for code in codes)
        return self.model_copy(update={"areas": areas, "area_codes": tuple(codes)})

    def index_of(self, iso_code: str) -> int:
        return self.area_codes.index(iso_code)


def default_params(codes: Sequence[str] = ISO_CODES) -> NetworkParams:
    """Benchmark parameter set; capacities stay 0 until a scenario supplies them."""
    area = AreaParams(t_p=25.0, k_p=0.05, eta_c=0.9, eta_d=1.1, p_disp_max=0.0)
    return NetworkParams(
        tau=2.5,
        areas=tuple(area for _ in codes),
        area_codes=tuple(codes),
        delta0=30.0,
        f0=50.0,
        steps_per_hour=1440,
    )
