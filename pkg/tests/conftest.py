"""
Shared fixtures.
"""

from typing import Sequence

import numpy as np
import pytest

from gridbench.app.models.network import ISO_CODES, NetworkParams, default_params
from gridbench.app.models.topology import Topology, build_eea_topology
from gridbench.app.schemas.scenario import HOURS_PER_DAY, HourlySeries, Scenario, SeriesKind

# Capacity giving an input limit of exactly 1 GW per step
UNIT_CAPACITY = 1440.0


@pytest.fixture
def topo26() -> Topology:
    return build_eea_topology()


@pytest.fixture
def params26() -> NetworkParams:
    return default_params().with_capacities(np.full(len(ISO_CODES), UNIT_CAPACITY))


@pytest.fixture
def make_network():
    """Topology and parameters for a subset of areas, capacities set to UNIT_CAPACITY."""

    def factory(codes: Sequence[str], tau: float = 2.5, capacity: float = UNIT_CAPACITY):
        topo = build_eea_topology(codes=codes)
        params = default_params(codes).with_capacities([capacity] * len(codes)).with_tau(tau)
        return topo, params

    return factory


@pytest.fixture
def make_scenario():
    """Scenario with constant (or given) hourly values for every area and kind."""

    def factory(codes: Sequence[str] = ISO_CODES, level: float = 5.0, capacity: float = UNIT_CAPACITY, values=None):
        series = []
        for code in codes:
            for kind in SeriesKind:
                hourly = values if values is not None else [level] * HOURS_PER_DAY
                series.append(HourlySeries(area=code, kind=kind, values=tuple(hourly)))
        return Scenario(
            area_codes=tuple(codes),
            series=tuple(series),
            capacities={code: capacity for code in codes},
            provenance="test",
        )

    return factory


@pytest.fixture
def dense_linear_model():
    """
    Independent dense construction of x+ = A x + B u + E w for the linear variant.

    Built per scalar entry from line coefficients, not from the Laplacian.
    """

    def build(topo: Topology, params: NetworkParams):
        n = params.n_areas
        tau = params.tau
        codes = params.area_codes
        A = np.zeros((3 * n, 3 * n))
        B = np.zeros((3 * n, 3 * n))
        E = np.zeros((3 * n, 2 * n))
        for i, area in enumerate(params.areas):
            b = tau * area.k_p / area.t_p
            A[3 * i, 3 * i] = 1.0
            A[3 * i, 3 * i + 1] = tau * 2.0 * np.pi
            A[3 * i + 1, 3 * i + 1] = 1.0 - tau / area.t_p
            A[3 * i + 2, 3 * i + 2] = 1.0
            for j in range(n):
                if j == i:
                    continue
                t_ij = topo.coefficient(codes[i], codes[j])
                A[3 * i + 1, 3 * i] -= b * t_ij
                A[3 * i + 1, 3 * j] += b * t_ij
            B[3 * i + 1, 3 * i] = b
            B[3 * i + 1, 3 * i + 1] = -b
            B[3 * i + 1, 3 * i + 2] = b
            B[3 * i + 2, 3 * i + 1] = tau * area.eta_c
            B[3 * i + 2, 3 * i + 2] = -tau / area.eta_d
            E[3 * i + 1, 2 * i] = -b
            E[3 * i + 1, 2 * i + 1] = b
        return A, B, E

    return build


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
