import pytest

from gridbench.app.core.errors import ConfigurationError
from gridbench.app.models.network import (
    ISO_CODES,
    N_AREAS,
    AreaId,
    AreaParams,
    NetworkParams,
    TurbineParams,
    default_params,
)


def test_iso_codes_are_unique_and_ordered():
    assert N_AREAS == 26
    assert len(set(ISO_CODES)) == 26
    assert ISO_CODES[0] == "AT"
    assert ISO_CODES[-1] == "CH"


def test_area_id_lookup_is_a_bijection():
    for index, code in enumerate(ISO_CODES):
        assert AreaId.from_iso(code).index == index
        assert AreaId.from_index(index).iso_code == code
    with pytest.raises(ValueError):
        AreaId(index=0, iso_code="BE")
    with pytest.raises(ConfigurationError):
        AreaId.from_iso("XX")


def test_default_params_match_benchmark_values():
    params = default_params()
    assert params.n_areas == 26
    assert params.tau == 2.5
    assert params.steps_per_hour == 1440
    assert params.delta0 == 30.0
    area = params.areas[0]
    assert (area.t_p, area.k_p, area.eta_c, area.eta_d) == (25.0, 0.05, 0.9, 1.1)
    assert area.p_disp_max == 0.0


def test_area_params_reject_nonpositive_constants():
    with pytest.raises(ValueError):
        AreaParams(t_p=0.0)
    with pytest.raises(ValueError):
        AreaParams(p_disp_max=-1.0)


def test_storage_capacity_equals_dispatchable_capacity():
    assert AreaParams(p_disp_max=12.5).e_max == 12.5


def test_with_tau_recomputes_steps_per_hour():
    params = default_params(["AT", "CH"]).with_tau(0.025)
    assert params.steps_per_hour == 144000
    assert params.area_codes == ("AT", "CH")


def test_with_capacities_checks_length():
    params = default_params(["AT", "CH"])
    assert [a.p_disp_max for a in params.with_capacities([1.0, 2.0]).areas] == [1.0, 2.0]
    with pytest.raises(ConfigurationError):
        params.with_capacities([1.0])


def test_scaled_only_touches_rotating_mass_constants():
    params = default_params(["AT"]).with_capacities([3.0])
    scaled = params.scaled(t_p=2.0, k_p=0.5)
    assert scaled.areas[0].t_p == 50.0
    assert scaled.areas[0].k_p == 0.025
    assert scaled.areas[0].p_disp_max == 3.0
    assert params.scaled() is params


def test_subset_keeps_requested_order():
    params = default_params().with_capacities(list(range(26)))
    sub = params.subset(["CH", "AT"])
    assert sub.area_codes == ("CH", "AT")
    assert [a.p_disp_max for a in sub.areas] == [25.0, 0.0]
    with pytest.raises(ConfigurationError):
        default_params(["AT"]).subset(["CH"])


def test_network_params_validation():
    with pytest.raises(ValueError):
        NetworkParams(areas=(AreaParams(),), area_codes=("AT",), delta0=95.0)
    with pytest.raises(ValueError):
        NetworkParams(areas=(AreaParams(),), area_codes=("AT", "CH"))
    with pytest.raises(ValueError):
        NetworkParams(areas=(AreaParams(), AreaParams()), area_codes=("AT", "AT"))


def test_turbine_requires_small_sampling_time():
    turbine = TurbineParams()
    turbine.check_against(default_params(["AT"]).with_tau(0.025))
    with pytest.raises(ConfigurationError):
        turbine.check_against(default_params(["AT"]))


def test_turbine_time_constants_must_be_fast():
    with pytest.raises(ConfigurationError):
        TurbineParams(t_t=5.0).check_against(default_params(["AT"]).with_tau(0.01))
