import numpy as np
import pytest

from gridbench.app.core.errors import DimensionError, NonFiniteValueError
from gridbench.app.models.constraints import ConstraintSet, check_violations, constraint_set
from gridbench.app.models.network import AreaParams
from gridbench.app.models.state import NetworkInput, NetworkState


def test_constraint_set_from_capacity():
    box = constraint_set(AreaParams(p_disp_max=2880.0))
    assert box.d_delta_bounds == (-30.0, 30.0)
    assert box.d_f_bounds == (-0.04, 0.04)
    assert box.e_bounds == (0.0, 2880.0)
    assert box.d_p_disp_bounds == (-2.0, 2.0)
    assert box.p_c_bounds == (0.0, 2.0)
    assert box.p_d_bounds == (0.0, 2.0)
    assert box.p_disp_total_bounds == (0.0, 2880.0)


def test_zero_capacity_pins_inputs_to_zero():
    box = constraint_set(AreaParams(p_disp_max=0.0))
    assert box.d_p_disp_bounds == (0.0, 0.0)
    assert box.e_bounds == (0.0, 0.0)


def test_unordered_bounds_are_rejected():
    with pytest.raises(ValueError):
        ConstraintSet(d_f_bounds=(0.1, -0.1))


def test_state_inside_boxes_has_no_violations():
    sets = [constraint_set(AreaParams(p_disp_max=1440.0))] * 2
    state = NetworkState(d_delta=[1.0, -1.0], d_f=[0.04, -0.04], e=[0.0, 1440.0])
    inputs = NetworkInput(d_p_disp=[1.0, -1.0], p_c=[0.0, 1.0], p_d=[1.0, 0.0])
    report = check_violations(state, inputs, sets)
    assert report.is_empty
    assert not report
    assert len(report) == 0


def test_violations_report_signed_excess():
    sets = [constraint_set(AreaParams(p_disp_max=1440.0))] * 2
    state = NetworkState(d_delta=[31.0, 0.0], d_f=[0.0, -0.05], e=[10.0, -2.0])
    inputs = NetworkInput(d_p_disp=[0.0, 0.0], p_c=[1.5, 0.0], p_d=[0.0, 0.0])
    report = check_violations(state, inputs, sets)
    magnitudes = {(v.area, v.quantity): v.magnitude for v in report}
    assert magnitudes[(0, "d_delta")] == pytest.approx(1.0)
    assert magnitudes[(0, "p_c")] == pytest.approx(0.5)
    assert magnitudes[(1, "d_f")] == pytest.approx(-0.01)
    assert magnitudes[(1, "e")] == pytest.approx(-2.0)
    assert report.by_kind() == {"d_delta_upper": 1, "p_c_upper": 1, "d_f_lower": 1, "e_lower": 1}
    assert report.areas_with("d_f") == [1]


def test_total_dispatch_checked_only_in_augmented_mode():
    sets = [constraint_set(AreaParams(p_disp_max=10.0))]
    inputs = NetworkInput.zeros(1)
    augmented = NetworkState(d_delta=[0.0], d_f=[0.0], e=[0.0], p_disp=[12.0], p_tie=[0.0])
    assert check_violations(augmented, inputs, sets).by_kind() == {"p_disp_upper": 1}
    assert check_violations(augmented, inputs, sets, include_total_dispatch=False).is_empty


def test_dimension_mismatch_raises():
    sets = [constraint_set(AreaParams(p_disp_max=1.0))]
    with pytest.raises(DimensionError):
        check_violations(NetworkState.zeros(2), NetworkInput.zeros(2), sets)


def test_state_vector_layout_is_interleaved_per_area():
    state = NetworkState(d_delta=[1.0, 4.0], d_f=[2.0, 5.0], e=[3.0, 6.0])
    np.testing.assert_array_equal(state.to_vector(), [1, 2, 3, 4, 5, 6])
    again = NetworkState.from_vector(state.to_vector(), 2)
    np.testing.assert_array_equal(again.e, [3.0, 6.0])
    with pytest.raises(DimensionError):
        NetworkState.from_vector(np.zeros(5), 2)


def test_network_state_arrays_are_read_only():
    state = NetworkState.zeros(2, augmented=True)
    with pytest.raises(ValueError):
        state.d_f[0] = 1.0
    assert state.field_names == ("d_delta", "d_f", "e", "p_disp", "p_tie")


BOXED_FIELDS = [
    ("d_delta", "d_delta_bounds"),
    ("d_f", "d_f_bounds"),
    ("e", "e_bounds"),
    ("d_p_disp", "d_p_disp_bounds"),
    ("p_c", "p_c_bounds"),
    ("p_d", "p_d_bounds"),
]


def test_report_is_empty_exactly_when_every_scalar_is_inside_its_box(rng):
    sets = [constraint_set(AreaParams(p_disp_max=c)) for c in (1440.0, 2880.0, 720.0)]
    n = len(sets)
    outcomes = set()
    for _ in range(500):
        values = {}
        for name, attr in BOXED_FIELDS:
            lower = np.array([getattr(s, attr)[0] for s in sets])
            upper = np.array([getattr(s, attr)[1] for s in sets])
            draw = rng.uniform(lower, upper)
            # closed boxes: bounds themselves are inside
            on_edge = rng.random(n) < 0.2
            values[name] = np.where(on_edge, np.where(rng.random(n) < 0.5, lower, upper), draw)
        if rng.random() < 0.5:
            name, attr = BOXED_FIELDS[rng.integers(len(BOXED_FIELDS))]
            area = int(rng.integers(n))
            lower, upper = getattr(sets[area], attr)
            gap = rng.uniform(1e-6, 1.0) * max(upper - lower, 1.0)
            values[name][area] = upper + gap if rng.random() < 0.5 else lower - gap
        inside = all(
            np.all(values[name] >= np.array([getattr(s, attr)[0] for s in sets]))
            and np.all(values[name] <= np.array([getattr(s, attr)[1] for s in sets]))
            for name, attr in BOXED_FIELDS
        )
        state = NetworkState(d_delta=values["d_delta"], d_f=values["d_f"], e=values["e"])
        inputs = NetworkInput(d_p_disp=values["d_p_disp"], p_c=values["p_c"], p_d=values["p_d"])
        report = check_violations(state, inputs, sets)
        assert report.is_empty == inside
        if not inside:
            assert len(report) == 1
        outcomes.add(inside)
    assert outcomes == {True, False}


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_non_finite_state_is_rejected(bad):
    sets = [constraint_set(AreaParams(p_disp_max=1440.0))] * 2
    state = NetworkState(d_delta=[0.0, 0.0], d_f=[0.0, bad], e=[0.0, 0.0])
    with pytest.raises(NonFiniteValueError, match="d_f of area 1"):
        check_violations(state, NetworkInput.zeros(2), sets)


def test_nan_input_is_rejected():
    sets = [constraint_set(AreaParams(p_disp_max=1440.0))]
    inputs = NetworkInput(d_p_disp=[0.0], p_c=[np.nan], p_d=[0.0])
    with pytest.raises(NonFiniteValueError, match="p_c"):
        check_violations(NetworkState.zeros(1), inputs, sets)
