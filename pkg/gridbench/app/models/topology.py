"""
Interconnection graph of the electrical areas.

The tie-line length table is embedded in units of 10^3 km, rows and columns
in ISO_CODES order. A zero entry means the areas are not connected.
"""

import csv
import io
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from gridbench.app.core.errors import ConfigurationError, DimensionError
from gridbench.app.models.network import ISO_CODES

# fmt: off
TIE_LINE_LENGTHS_MM = np.array([
    # AT    BE    BG    HR    CZ     DK     EE    FI    FR     DE     GR     HU    IE     IT     LV    LT     NL     NO     PL     PT    RO    SK    SI    ES    SE     CH
    [0,    0,    0,    0,    2.65, 0,     0,    0,    0,     4.82,  0,     5.61, 0,     4.76,  0,    0,     0,     0,     0,     0,    0,    5.88, 1.85, 0,    0,     5.58],   # AT
    [0,    0,    0,    0,    0,    0,     0,    0,    4.69,  5.77,  0,     0,    13.19, 0,     0,    0,     1.75,  0,     0,     0,    0,    0,    0,    0,    0,     0],      # BE
    [0,    0,    0,    0,    0,    0,     0,    0,    0,     0,     4.02,  0,    0,     0,     0,    0,     0,     0,     0,     0,    3.01, 0,    0,    0,    0,     0],      # BG
    [0,    0,    0,    0,    0,    0,     0,    0,    0,     0,     0,     3.61, 0,     0,     0,    0,     0,     0,     0,     0,    0,    0,    2.12, 0,    0,     0],      # HR
    [2.65, 0,    0,    0,    0,    0,     0,    0,    0,     5.13,  0,     0,    0,     0,     0,    0,     0,     0,     4.67,  0,    0,    4.33, 0,    0,    0,     0],      # CZ
    [0,    0,    0,    0,    0,    0,     0,    0,    0,     5.03,  0,     0,    17.82, 0,     0,    0,     5.44,  11.56, 0,     0,    0,    0,    0,    0,    10.22, 0],      # DK
    [0,    0,    0,    0,    0,    0,     0,    6.37, 0,     0,     0,     0,    0,     0,     2.2,  0,     0,     0,     0,     0,    0,    0,    0,    0,    0,     0],      # EE
    [0,    0,    0,    0,    0,    0,     6.37, 0,    0,     0,     0,     0,    0,     0,     0,    0,     0,     8.99,  0,     0,    0,    0,    0,    0,    8.89,  0],      # FI
    [0,    4.69, 0,    0,    0,    0,     0,    0,    0,     9.35,  0,     0,    12.38, 11.19, 0,    0,     0,     0,     0,     0,    0,    0,    0,    8.58, 0,     6.09],   # FR
    [4.82, 5.77, 0,    0,    5.13, 5.03,  0,    0,    9.35,  0,     0,     0,    0,     0,     0,    0,     4.98,  15.23, 9.06,  0,    0,    0,    0,    0,    13.41, 4.84],   # DE
    [0,    0,    4.02, 0,    0,    0,     0,    0,    0,     0,     0,     0,    0,     10.94, 0,    0,     0,     0,     0,     0,    0,    0,    0,    0,    0,     0],      # GR
    [5.61, 0,    0,    3.61, 0,    0,     0,    0,    0,     0,     0,     0,    0,     0,     0,    0,     0,     0,     0,     0,    5.87, 1.48, 4.63, 0,    0,     0],      # HU
    [0,    13.19, 0,   0,    0,    17.82, 0,    0,    12.38, 0,     0,     0,    0,     0,     0,    0,     13.84, 27.51, 0,     0,    0,    0,    0,    0,    0,     0],      # IE
    [4.76, 0,    0,    0,    0,    0,     0,    0,    11.19, 0,     10.94, 0,    0,     0,     0,    0,     0,     0,     0,     0,    0,    0,    3.81, 0,    0,     5.84],   # IT
    [0,    0,    0,    0,    0,    0,     2.2,  0,    0,     0,     0,     0,    0,     0,     0,    1.69,  0,     0,     0,     0,    0,    0,    0,    0,    0,     0],      # LV
    [0,    0,    0,    0,    0,    0,     0,    0,    0,     0,     0,     0,    0,     0,     1.69, 0,     0,     0,     5.55,  0,    0,    0,    0,    0,    10.14, 0],      # LT
    [0,    1.75, 0,    0,    0,    5.44,  0,    0,    0,     4.98,  0,     0,    13.84, 0,     0,    0,     0,     16.99, 0,     0,    0,    0,    0,    0,    0,     0],      # NL
    [0,    0,    0,    0,    0,    11.56, 0,    8.99, 0,     15.23, 0,     0,    27.51, 0,     0,    0,     16.99, 0,     0,     0,    0,    0,    0,    0,    2.28,  0],      # NO
    [0,    0,    0,    0,    4.67, 0,     0,    0,    0,     9.06,  0,     0,    0,     0,     0,    5.55,  0,     0,     0,     0,    0,    3.37, 0,    0,    10.93, 0],      # PL
    [0,    0,    0,    0,    0,    0,     0,    0,    0,     0,     0,     0,    0,     0,     0,    0,     0,     0,     0,     0,    0,    0,    0,    4.34, 0,     0],      # PT
    [0,    0,    3.01, 0,    0,    0,     0,    0,    0,     0,     0,     5.87, 0,     0,     0,    0,     0,     0,     0,     0,    0,    0,    0,    0,    0,     0],      # RO
    [5.88, 0,    0,    0,    4.33, 0,     0,    0,    0,     0,     0,     1.48, 0,     0,     0,    0,     0,     0,     3.37,  0,    0,    0,    0,    0,    0,     0],      # SK
    [1.85, 0,    0,    2.12, 0,    0,     0,    0,    0,     0,     0,     4.63, 0,     3.81,  0,    0,     0,     0,     0,     0,    0,    0,    0,    0,    0,     0],      # SI
    [0,    0,    0,    0,    0,    0,     0,    0,    8.58,  0,     0,     0,    0,     0,     0,    0,     0,     0,     0,     4.34, 0,    0,    0,    0,    0,     0],      # ES
    [0,    0,    0,    0,    0,    10.22, 0,    8.89, 0,     13.41, 0,     0,    0,     0,     0,    10.14, 0,     2.28,  10.93, 0,    0,    0,    0,    0,    0,     0],      # SE
    [5.58, 0,    0,    0,    0,    0,     0,    0,    6.09,  4.84,  0,     0,    0,     5.84,  0,    0,     0,     0,     0,     0,    0,    0,    0,    0,    0,     0],      # CH
], dtype=float)
# fmt: on
TIE_LINE_LENGTHS_MM.setflags(write=False)

KM_PER_TABLE_UNIT = 1000.0
EDGE_CSV_COLUMNS = ("iso_a", "iso_b", "d_km", "k")


@dataclass(frozen=True)
class TieLine:
    """Undirected tie line between two areas (stored with a < b)."""
    a: str
    b: str
    d: float  # km
    k: float = 1.0  # km*GW/deg

    def __post_init__(self):
        if self.a == self.b:
            raise ConfigurationError(f"Tie line cannot connect {self.a} to itself")
        if not self.d > 0:
            raise ConfigurationError(f"Tie line {self.a}-{self.b}: distance must be positive")
        if not self.k > 0:
            raise ConfigurationError(f"Tie line {self.a}-{self.b}: gain must be positive")
        if self.b < self.a:
            a, b = self.a, self.b
            object.__setattr__(self, "a", b)
            object.__setattr__(self, "b", a)

    @property
    def key(self) -> Tuple[str, str]:
        return (self.a, self.b)


def tie_coefficient(line: TieLine) -> float:
    """Synchronizing coefficient T_ij = k_ij / d_ij in GW/deg."""
    if line.d <= 0:
        raise ConfigurationError(f"Tie line {line.a}-{line.b}: distance must be positive")
    return line.k / line.d


class Topology:
    """
    Immutable undirected weighted graph over an ordered set of areas.

    Keeps the lines, per-area neighbour lists, and the sparse incidence
    structure used to evaluate tie powers in one vectorized pass.
    """

    def __init__(self, area_codes: Sequence[str], lines: Iterable[TieLine]):
        self.area_codes: Tuple[str, ...] = tuple(area_codes)
        self._index = {code: i for i, code in enumerate(self.area_codes)}
        unique: Dict[Tuple[str, str], TieLine] = {}
        for line in lines:
            if line.a not in self._index or line.b not in self._index:
                raise ConfigurationError(f"Tie line {line.a}-{line.b} references an unknown area")
            unique[line.key] = line
        self.lines: Tuple[TieLine, ...] = tuple(
            sorted(unique.values(), key=lambda tl: (self._index[tl.a], self._index[tl.b]))
        )

        self._heads = np.array([self._index[tl.a] for tl in self.lines], dtype=int)
        self._tails = np.array([self._index[tl.b] for tl in self.lines], dtype=int)
        self._coefficients = np.array([tie_coefficient(tl) for tl in self.lines], dtype=float)

        neighbors: List[List[str]] = [[] for _ in self.area_codes]
        for line in self.lines:
            neighbors[self._index[line.a]].append(line.b)
            neighbors[self._index[line.b]].append(line.a)
        self.adjacency: Dict[str, Tuple[str, ...]] = {
            code: tuple(sorted(neighbors[i], key=self._index.get))
            for i, code in enumerate(self.area_codes)
        }

    @property
    def n_areas(self) -> int:
        return len(self.area_codes)

    @property
    def n_edges(self) -> int:
        return len(self.lines)

    def index_of(self, code: str) -> int:
        return self._index[code]

    def neighbors(self, code: str) -> Tuple[str, ...]:
        return self.adjacency[code]

    def line(self, a: str, b: str) -> Optional[TieLine]:
        key = (a, b) if a < b else (b, a)
        for line in self.lines:
            if line.key == key:
                return line
        return None

    def coefficient(self, a: str, b: str) -> float:
        line = self.line(a, b)
        return 0.0 if line is None else tie_coefficient(line)

    def laplacian(self) -> sparse.csr_matrix:
        """Weighted Laplacian L with L_ii = sum_j T_ij and L_ij = -T_ij, so P_tie = L @ angles."""
        n = self.n_areas
        rows = np.concatenate([self._heads, self._tails, self._heads, self._tails])
        cols = np.concatenate([self._heads, self._tails, self._tails, self._heads])
        data = np.concatenate(
            [self._coefficients, self._coefficients, -self._coefficients, -self._coefficients]
        )
        return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))

    def is_connected(self) -> bool:
        n = self.n_areas
        if n <= 1:
            return True
        adjacency = sparse.csr_matrix(
            (np.ones(self.n_edges), (self._heads, self._tails)), shape=(n, n)
        )
        n_components, _ = connected_components(adjacency, directed=False)
        return n_components == 1

    def subgraph(self, codes: Sequence[str]) -> "Topology":
        """Topology restricted to the given areas, keeping only lines among them."""
        keep = set(codes)
        missing = keep - set(self.area_codes)
        if missing:
            raise ConfigurationError(f"Areas not in topology: {sorted(missing)}")
        return Topology(codes, [tl for tl in self.lines if tl.a in keep and tl.b in keep])

    def with_gain(self, a: str, b: str, k: float) -> "Topology":
        """Copy with the gain of one line replaced."""
        target = self.line(a, b)
        if target is None:
            raise ConfigurationError(f"No tie line between {a} and {b}")
        lines = [
            TieLine(tl.a, tl.b, tl.d, k) if tl.key == target.key else tl for tl in self.lines
        ]
        return Topology(self.area_codes, lines)

    def edge_rows(self) -> List[Tuple[str, str, float, float]]:
        return [(tl.a, tl.b, tl.d, tl.k) for tl in self.lines]

    def to_edge_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(EDGE_CSV_COLUMNS)
        for a, b, d, k in self.edge_rows():
            writer.writerow([a, b, f"{d:g}", f"{k:g}"])
        return buffer.getvalue()

    def __repr__(self) -> str:
        return f"Topology(areas={self.n_areas}, edges={self.n_edges})"


def build_eea_topology(k: float = 1.0, codes: Optional[Sequence[str]] = None) -> Topology:
    """Topology of the 26-area network from the embedded length table."""
    lines = []
    n = len(ISO_CODES)
    for i in range(n):
        for j in range(i + 1, n):
            length = TIE_LINE_LENGTHS_MM[i, j]
            if length > 0:
                lines.append(TieLine(ISO_CODES[i], ISO_CODES[j], length * KM_PER_TABLE_UNIT, k))
    topology = Topology(ISO_CODES, lines)
    if codes is not None and tuple(codes) != ISO_CODES:
        topology = topology.subgraph(codes)
    return topology


def tie_power(angles, topo: Topology) -> np.ndarray:
    """Tie-line power deviation of every area: sum over neighbours of T_ij (d_delta_i - d_delta_j)."""
    angles = np.asarray(angles, dtype=float).reshape(-1)
    if angles.shape[0] != topo.n_areas:
        raise DimensionError(f"{angles.shape[0]} angles for {topo.n_areas} areas")
    flow = topo._coefficients * (angles[topo._heads] - angles[topo._tails])
    power = np.zeros(topo.n_areas)
    np.add.at(power, topo._heads, flow)
    np.add.at(power, topo._tails, -flow)
    return power
