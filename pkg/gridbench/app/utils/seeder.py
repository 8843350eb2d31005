"""
Synthetic scenario generator for development and testing.

Stands in for measured network data: a daily load shape per area, solar and
wind infeed, noisy day-ahead forecasts and capacities sized so that the
dispatch input box covers every deviation of the day.
"""

from typing import Dict, Literal, Sequence

import numpy as np

from gridbench.app.core.logging_config import get_logger
from gridbench.app.models.constraints import INPUT_STEPS_PER_CAPACITY
from gridbench.app.models.network import ISO_CODES
from gridbench.app.schemas.scenario import HOURS_PER_DAY, HourlySeries, Scenario, SeriesKind

logger = get_logger(__name__)

Profile = Literal["calm", "volatile"]

# Typical average load per area [GW]
BASE_LOAD_GW: Dict[str, float] = {
    "AT": 7.0, "BE": 9.5, "BG": 4.5, "HR": 2.0, "CZ": 7.5, "DK": 4.0, "EE": 1.0,
    "FI": 9.0, "FR": 55.0, "DE": 60.0, "GR": 6.0, "HU": 5.0, "IE": 3.5, "IT": 35.0,
    "LV": 0.8, "LT": 1.3, "NL": 13.0, "NO": 15.0, "PL": 19.0, "PT": 5.5, "RO": 6.5,
    "SK": 3.2, "SI": 1.5, "ES": 30.0, "SE": 16.0, "CH": 7.0,
}

# Relative forecast error standard deviation per profile
FORECAST_SIGMA = {"calm": 0.01, "volatile": 0.10}
WIND_VOLATILITY = {"calm": 0.03, "volatile": 0.15}
FORECAST_CLIP_SIGMAS = 4.0
CAPACITY_MARGIN = 1.25


def daily_load_shape(hours: np.ndarray) -> np.ndarray:
    """Relative load with a trough around 04:00 and an evening peak around 19:00."""
    day = 0.5 * (1.0 - np.cos(2.0 * np.pi * (hours - 4.0) / 24.0))
    evening = np.exp(-0.5 * ((hours - 19.0) / 2.0) ** 2)
    return 0.78 + 0.17 * day + 0.08 * evening


def solar_shape(hours: np.ndarray) -> np.ndarray:
    return np.clip(np.sin(np.pi * (hours - 6.0) / 12.0), 0.0, None)


def _forecast(rng: np.random.Generator, measured: np.ndarray, sigma: float) -> np.ndarray:
    limit = FORECAST_CLIP_SIGMAS * sigma
    noise = np.clip(rng.normal(0.0, sigma, measured.shape), -limit, limit)
    return measured * (1.0 + noise)


def synthetic_scenario(
    seed: int = 0,
    profile: Profile = "calm",
    area_codes: Sequence[str] = ISO_CODES,
) -> Scenario:
    """Deterministic scenario for the given seed and profile."""
    if profile not in FORECAST_SIGMA:
        raise ValueError(f"Unknown profile: {profile}")
    rng = np.random.default_rng(seed)
    sigma = FORECAST_SIGMA[profile]
    hours = np.arange(HOURS_PER_DAY, dtype=float)
    load_shape = daily_load_shape(hours)
    sun = solar_shape(hours)

    series = []
    capacities: Dict[str, float] = {}
    # Draw for all 26 areas so a subset sees the same data as the full network
    for code in ISO_CODES:
        base = BASE_LOAD_GW[code] * (1.0 + 0.03 * rng.normal())
        load_meas = base * load_shape * (1.0 + 0.005 * rng.normal(size=HOURS_PER_DAY))

        solar_cap = 0.15 * base * rng.uniform(0.3, 1.0)
        wind_cap = 0.25 * base * rng.uniform(0.3, 1.0)
        walk = np.cumsum(rng.normal(0.0, WIND_VOLATILITY[profile], HOURS_PER_DAY))
        wind = wind_cap * np.clip(0.4 + walk, 0.02, None)
        ren_meas = solar_cap * sun + wind

        load_for = _forecast(rng, load_meas, sigma)
        ren_for = _forecast(rng, ren_meas, sigma)
        if code not in area_codes:
            continue

        net = np.stack([load_meas - ren_meas, load_for - ren_for])
        deviation = np.abs(net - net[:, :1]).max()
        capacities[code] = float(
            max(net[0].max(), INPUT_STEPS_PER_CAPACITY * CAPACITY_MARGIN * deviation)
        )
        for kind, values in (
            (SeriesKind.load_meas, load_meas),
            (SeriesKind.load_for, load_for),
            (SeriesKind.ren_meas, ren_meas),
            (SeriesKind.ren_for, ren_for),
        ):
            series.append(HourlySeries(area=code, kind=kind, values=tuple(float(v) for v in values)))

    logger.debug("Synthetic scenario generated", seed=seed, profile=profile, areas=len(area_codes))
    return Scenario(
        area_codes=tuple(area_codes),
        series=tuple(series),
        capacities=capacities,
        provenance=f"synthetic:{profile}",
        seed=seed,
    )
