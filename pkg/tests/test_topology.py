import numpy as np
import pytest

from gridbench.app.core.errors import ConfigurationError, DimensionError
from gridbench.app.models.network import ISO_CODES
from gridbench.app.models.topology import (
    EDGE_CSV_COLUMNS,
    TIE_LINE_LENGTHS_MM,
    TieLine,
    Topology,
    build_eea_topology,
    tie_coefficient,
    tie_power,
)

EXPECTED_EDGES = 53


def test_length_table_is_symmetric_with_zero_diagonal():
    np.testing.assert_array_equal(TIE_LINE_LENGTHS_MM, TIE_LINE_LENGTHS_MM.T)
    assert np.all(np.diag(TIE_LINE_LENGTHS_MM) == 0)
    assert np.count_nonzero(TIE_LINE_LENGTHS_MM) == 2 * EXPECTED_EDGES


def test_embedded_topology_edge_count(topo26):
    assert topo26.n_areas == 26
    assert topo26.n_edges == EXPECTED_EDGES
    assert topo26.is_connected()


def test_lines_and_coefficients(topo26):
    line = topo26.line("CZ", "AT")
    assert line is not None
    assert (line.a, line.b) == ("AT", "CZ")
    assert line.d == pytest.approx(2650.0)
    assert topo26.coefficient("AT", "CZ") == pytest.approx(1.0 / 2650.0)
    assert topo26.coefficient("AT", "PT") == 0.0
    assert "DE" in topo26.neighbors("AT")
    assert topo26.neighbors("PT") == ("ES",)


def test_tie_line_validation():
    with pytest.raises(ConfigurationError):
        TieLine("AT", "AT", 100.0)
    with pytest.raises(ConfigurationError):
        TieLine("AT", "CZ", 0.0)
    assert tie_coefficient(TieLine("AT", "CZ", 200.0, 2.0)) == pytest.approx(0.01)


def test_laplacian_rows_sum_to_zero(topo26):
    L = topo26.laplacian().toarray()
    np.testing.assert_allclose(L, L.T)
    np.testing.assert_allclose(L.sum(axis=1), 0.0, atol=1e-15)
    assert np.all(np.diag(L) > 0)


def test_tie_power_two_areas_by_hand():
    topo = Topology(["AT", "CH"], [TieLine("AT", "CH", 500.0)])
    power = tie_power([2.0, -1.0], topo)
    np.testing.assert_allclose(power, [3.0 / 500.0, -3.0 / 500.0])


def test_tie_power_matches_laplacian(topo26, rng):
    L = topo26.laplacian()
    angles = rng.normal(scale=10.0, size=26)
    np.testing.assert_allclose(tie_power(angles, topo26), L @ angles, rtol=1e-12, atol=1e-15)


def test_tie_power_is_conserved(topo26, rng):
    for _ in range(1000):
        angles = rng.uniform(-30.0, 30.0, size=26)
        power = tie_power(angles, topo26)
        assert abs(power.sum()) <= 1e-12 * max(1.0, np.abs(power).sum())


def test_equal_angles_give_zero_tie_power(topo26):
    np.testing.assert_allclose(tie_power(np.full(26, 7.0), topo26), 0.0, atol=1e-15)


def test_tie_power_dimension_check(topo26):
    with pytest.raises(DimensionError):
        tie_power(np.zeros(25), topo26)


def test_subgraph_keeps_internal_lines_only(topo26):
    sub = topo26.subgraph(["AT", "CZ", "PT"])
    assert sub.area_codes == ("AT", "CZ", "PT")
    assert sub.n_edges == 1
    assert not sub.is_connected()
    with pytest.raises(ConfigurationError):
        topo26.subgraph(["AT", "XX"])


def test_with_gain_replaces_one_line(topo26):
    changed = topo26.with_gain("DE", "AT", 2.0)
    assert changed.coefficient("AT", "DE") == pytest.approx(2.0 * topo26.coefficient("AT", "DE"))
    assert changed.coefficient("AT", "CZ") == topo26.coefficient("AT", "CZ")
    with pytest.raises(ConfigurationError):
        topo26.with_gain("AT", "PT", 2.0)


def test_edge_csv_export(topo26):
    lines = topo26.to_edge_csv().splitlines()
    assert lines[0] == ",".join(EDGE_CSV_COLUMNS)
    assert len(lines) == EXPECTED_EDGES + 1
    assert lines[1].startswith("AT,")


def test_build_with_gain_and_subset():
    topo = build_eea_topology(k=0.5, codes=["FR", "ES", "PT"])
    assert topo.area_codes == ("FR", "ES", "PT")
    assert topo.n_edges == 2
    assert topo.coefficient("FR", "ES") == pytest.approx(0.5 / 8580.0)
    assert build_eea_topology().area_codes == ISO_CODES
