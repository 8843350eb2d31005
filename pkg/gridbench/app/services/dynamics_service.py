"""
Discrete-time network dynamics.

Forward-Euler update rows with tau in seconds
everywhere and the 2*pi factor on the angle row. All step functions are
pure; tie power is evaluated from the pre-step angle snapshot.
"""

from typing import Optional, Union

import numpy as np

from gridbench.app.core.errors import ConfigurationError, DimensionError, NonFiniteValueError
from gridbench.app.models.network import AreaParams, ModelVariant, NetworkParams, TurbineParams
from gridbench.app.models.state import NetworkExogenous, NetworkInput, NetworkState
from gridbench.app.models.topology import Topology, tie_power

Number = Union[float, np.ndarray]


def _area_arrays(params: NetworkParams):
    t_p = np.array([a.t_p for a in params.areas])
    k_p = np.array([a.k_p for a in params.areas])
    eta_c = np.array([a.eta_c for a in params.areas])
    eta_d = np.array([a.eta_d for a in params.areas])
    return t_p, k_p, eta_c, eta_d


def _validate(
    state: NetworkState,
    inputs: NetworkInput,
    exo: NetworkExogenous,
    topo: Topology,
    params: NetworkParams,
) -> None:
    n = params.n_areas
    for name, obj in (("state", state), ("input", inputs), ("exogenous", exo)):
        if obj.n_areas != n:
            raise DimensionError(f"{name} has {obj.n_areas} areas, network has {n}")
    if topo.n_areas != n:
        raise DimensionError(f"Topology has {topo.n_areas} areas, network has {n}")
    if not state.is_finite():
        raise NonFiniteValueError("State contains non-finite values")
    if not inputs.is_finite():
        raise NonFiniteValueError("Input contains non-finite values")
    if not np.all(np.isfinite(exo.to_vector())):
        raise NonFiniteValueError("Exogenous signals contain non-finite values")


def _swing_rows(state, d_p_disp, p_c, p_d, exo, topo, params):
    """Angle and frequency rows; returns (d_delta+, d_f+, p_tie)."""
    t_p, k_p, _, _ = _area_arrays(params)
    tau = params.tau
    p_tie = tie_power(state.d_delta, topo)
    balance = d_p_disp - exo.d_p_load + exo.d_p_ren - p_tie - p_c + p_d
    d_delta_next = state.d_delta + tau * 2.0 * np.pi * state.d_f
    d_f_next = (1.0 - tau / t_p) * state.d_f + tau * (k_p / t_p) * balance
    return d_delta_next, d_f_next, p_tie


def _storage_row(e, p_c, p_d, params: NetworkParams):
    _, _, eta_c, eta_d = _area_arrays(params)
    return e + params.tau * (eta_c * p_c - p_d / eta_d)


def step_linear(
    state: NetworkState,
    inputs: NetworkInput,
    exo: NetworkExogenous,
    topo: Topology,
    params: NetworkParams,
) -> NetworkState:
    """Baseline linear update of angle, frequency and stored energy."""
    _validate(state, inputs, exo, topo, params)
    d_delta, d_f, _ = _swing_rows(state, inputs.d_p_disp, inputs.p_c, inputs.p_d, exo, topo, params)
    e = _storage_row(state.e, inputs.p_c, inputs.p_d, params)
    return state.replace(d_delta=d_delta, d_f=d_f, e=e)


def step_pwa_ess(e: Number, p_ess: Number, params: AreaParams, tau: float) -> Number:
    """Two-mode storage update; p_ess >= 0 takes the charging piece."""
    e_arr = np.asarray(e, dtype=float)
    p_arr = np.asarray(p_ess, dtype=float)
    if not (np.all(np.isfinite(e_arr)) and np.all(np.isfinite(p_arr))):
        raise NonFiniteValueError("Storage update requires finite inputs")
    gain = np.where(p_arr >= 0, params.eta_c, 1.0 / params.eta_d)
    result = e_arr + tau * gain * p_arr
    return float(result) if result.ndim == 0 else result


def step_pwa(
    state: NetworkState,
    inputs: NetworkInput,
    exo: NetworkExogenous,
    topo: Topology,
    params: NetworkParams,
) -> NetworkState:
    """Network update with the storage row replaced by the two-mode model on p_c - p_d."""
    _validate(state, inputs, exo, topo, params)
    d_delta, d_f, _ = _swing_rows(state, inputs.d_p_disp, inputs.p_c, inputs.p_d, exo, topo, params)
    p_ess = inputs.p_c - inputs.p_d
    e = np.array(
        [
            step_pwa_ess(state.e[i], p_ess[i], area, params.tau)
            for i, area in enumerate(params.areas)
        ]
    )
    return state.replace(d_delta=d_delta, d_f=d_f, e=e)


def step_turbine(
    state: NetworkState,
    inputs: NetworkInput,
    exo: NetworkExogenous,
    topo: Topology,
    params: NetworkParams,
    turbine: TurbineParams,
) -> NetworkState:
    """
    Update with first-order turbine and storage actuator lags.

    inputs carries the commands (u_disp, u_c, u_d). The swing and storage
    rows use the current actuator states, which then advance towards the
    commands.
    """
    turbine.check_against(params)
    if not state.turbine:
        raise DimensionError("Turbine update requires the d_p_disp, p_c, p_d states")
    _validate(state, inputs, exo, topo, params)
    tau = params.tau
    d_delta, d_f, _ = _swing_rows(state, state.d_p_disp, state.p_c, state.p_d, exo, topo, params)
    e = _storage_row(state.e, state.p_c, state.p_d, params)
    d_p_disp = (1.0 - tau / turbine.t_t) * state.d_p_disp + tau * (turbine.k_t / turbine.t_t) * inputs.d_p_disp
    p_c = (1.0 - tau / turbine.t_c) * state.p_c + tau * (turbine.k_c / turbine.t_c) * inputs.p_c
    p_d = (1.0 - tau / turbine.t_d) * state.p_d + tau * (turbine.k_d / turbine.t_d) * inputs.p_d
    return state.replace(d_delta=d_delta, d_f=d_f, e=e, d_p_disp=d_p_disp, p_c=p_c, p_d=p_d)


def step_augmented(
    state: NetworkState,
    inputs: NetworkInput,
    exo: NetworkExogenous,
    topo: Topology,
    params: NetworkParams,
) -> NetworkState:
    """Linear update plus integration of total dispatch and tie deviation."""
    if not state.augmented:
        raise DimensionError("Augmented update requires the p_disp and p_tie states")
    _validate(state, inputs, exo, topo, params)
    d_delta, d_f, p_tie = _swing_rows(state, inputs.d_p_disp, inputs.p_c, inputs.p_d, exo, topo, params)
    e = _storage_row(state.e, inputs.p_c, inputs.p_d, params)
    return state.replace(
        d_delta=d_delta,
        d_f=d_f,
        e=e,
        p_disp=state.p_disp + params.tau * inputs.d_p_disp,
        p_tie=state.p_tie + params.tau * p_tie,
    )


def initial_dispatch(load0: Number, ren0: Number) -> Number:
    """Dispatchable production covering the initial net load, never negative."""
    load = np.asarray(load0, dtype=float)
    ren = np.asarray(ren0, dtype=float)
    if not (np.all(np.isfinite(load)) and np.all(np.isfinite(ren))):
        raise NonFiniteValueError("Initial dispatch requires finite load and renewables")
    result = np.maximum(0.0, load - ren)
    return float(result) if result.ndim == 0 else result


def initial_state(
    variant: ModelVariant,
    params: NetworkParams,
    storage_fraction: float = 0.0,
    load0: Optional[np.ndarray] = None,
    ren0: Optional[np.ndarray] = None,
) -> NetworkState:
    """Rest state with storage at a fraction of capacity (empty by default)."""
    if not 0.0 <= storage_fraction <= 1.0:
        raise ConfigurationError(f"Storage fraction must lie in [0, 1], got {storage_fraction}")
    n = params.n_areas
    e_max = np.array([a.e_max for a in params.areas])
    zero = np.zeros(n)
    kwargs = dict(d_delta=zero, d_f=zero, e=storage_fraction * e_max)
    if variant == ModelVariant.augmented:
        load = zero if load0 is None else load0
        ren = zero if ren0 is None else ren0
        kwargs.update(p_disp=initial_dispatch(load, ren), p_tie=zero)
    elif variant == ModelVariant.turbine:
        kwargs.update(d_p_disp=zero, p_c=zero, p_d=zero)
    return NetworkState(**kwargs)


def advance(
    variant: ModelVariant,
    state: NetworkState,
    inputs: NetworkInput,
    exo: NetworkExogenous,
    topo: Topology,
    params: NetworkParams,
    turbine: Optional[TurbineParams] = None,
) -> NetworkState:
    """Advance the plant one step with the selected model variant."""
    if variant == ModelVariant.linear:
        return step_linear(state, inputs, exo, topo, params)
    if variant == ModelVariant.pwa_ess:
        return step_pwa(state, inputs, exo, topo, params)
    if variant == ModelVariant.augmented:
        return step_augmented(state, inputs, exo, topo, params)
    if variant == ModelVariant.turbine:
        return step_turbine(state, inputs, exo, topo, params, turbine or TurbineParams())
    raise ConfigurationError(f"Unknown model variant: {variant}")
