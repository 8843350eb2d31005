"""
State, input and exogenous-signal containers.

Network-level containers hold one numpy array per quantity, indexed by area
position. Vector forms interleave quantities per area, e.g. the base state is
[d_delta_0, d_f_0, e_0, d_delta_1, ...].
"""

from dataclasses import dataclass, fields, replace
from typing import Optional, Tuple

import numpy as np

from gridbench.app.core.errors import DimensionError, NonFiniteValueError

BASE_STATE_FIELDS: Tuple[str, ...] = ("d_delta", "d_f", "e")
AUGMENTED_STATE_FIELDS: Tuple[str, ...] = ("p_disp", "p_tie")
TURBINE_STATE_FIELDS: Tuple[str, ...] = ("d_p_disp", "p_c", "p_d")
INPUT_FIELDS: Tuple[str, ...] = ("d_p_disp", "p_c", "p_d")
EXOGENOUS_FIELDS: Tuple[str, ...] = ("d_p_load", "d_p_ren")


def _frozen_array(values, name: str, n: Optional[int] = None) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    if n is not None and arr.shape[0] != n:
        raise DimensionError(f"{name} has {arr.shape[0]} entries, expected {n}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class AreaState:
    """State of one area."""
    d_delta: float
    d_f: float
    e: float
    p_disp: Optional[float] = None
    p_tie: Optional[float] = None
    d_p_disp: Optional[float] = None
    p_c: Optional[float] = None
    p_d: Optional[float] = None


@dataclass(frozen=True)
class AreaInput:
    """Control input of one area (sign constraints are checked, not enforced)."""
    d_p_disp: float
    p_c: float
    p_d: float


@dataclass(frozen=True)
class AreaExogenous:
    """Load and renewable deviations of one area."""
    d_p_load: float
    d_p_ren: float

    def __post_init__(self):
        if not (np.isfinite(self.d_p_load) and np.isfinite(self.d_p_ren)):
            raise NonFiniteValueError("Exogenous values must be finite")


@dataclass(frozen=True, eq=False)
class NetworkState:
    """Network state; augmented and turbine fields are None unless the variant uses them."""
    d_delta: np.ndarray
    d_f: np.ndarray
    e: np.ndarray
    p_disp: Optional[np.ndarray] = None
    p_tie: Optional[np.ndarray] = None
    d_p_disp: Optional[np.ndarray] = None
    p_c: Optional[np.ndarray] = None
    p_d: Optional[np.ndarray] = None

    def __post_init__(self):
        n = np.asarray(self.d_delta).reshape(-1).shape[0]
        for f in fields(self):
            value = getattr(self, f.name)
            if value is not None:
                object.__setattr__(self, f.name, _frozen_array(value, f.name, n))
        if (self.p_disp is None) != (self.p_tie is None):
            raise DimensionError("p_disp and p_tie must be given together")
        turbine = [getattr(self, name) is None for name in TURBINE_STATE_FIELDS]
        if any(turbine) and not all(turbine):
            raise DimensionError("Turbine states d_p_disp, p_c, p_d must be given together")

    @classmethod
    def zeros(cls, n_areas: int, augmented: bool = False, turbine: bool = False) -> "NetworkState":
        zero = np.zeros(n_areas)
        kwargs = {name: zero for name in BASE_STATE_FIELDS}
        if augmented:
            kwargs.update({name: zero for name in AUGMENTED_STATE_FIELDS})
        if turbine:
            kwargs.update({name: zero for name in TURBINE_STATE_FIELDS})
        return cls(**kwargs)

    @property
    def n_areas(self) -> int:
        return self.d_delta.shape[0]

    @property
    def augmented(self) -> bool:
        return self.p_disp is not None

    @property
    def turbine(self) -> bool:
        return self.d_p_disp is not None

    @property
    def field_names(self) -> Tuple[str, ...]:
        names = BASE_STATE_FIELDS
        if self.augmented:
            names = names + AUGMENTED_STATE_FIELDS
        if self.turbine:
            names = names + TURBINE_STATE_FIELDS
        return names

    def to_vector(self) -> np.ndarray:
        return np.column_stack([getattr(self, name) for name in self.field_names]).reshape(-1)

    @classmethod
    def from_vector(
        cls, vector, n_areas: int, augmented: bool = False, turbine: bool = False
    ) -> "NetworkState":
        names = BASE_STATE_FIELDS
        if augmented:
            names = names + AUGMENTED_STATE_FIELDS
        if turbine:
            names = names + TURBINE_STATE_FIELDS
        vec = np.asarray(vector, dtype=float).reshape(-1)
        if vec.shape[0] != n_areas * len(names):
            raise DimensionError(
                f"State vector has {vec.shape[0]} entries, expected {n_areas * len(names)}"
            )
        block = vec.reshape(n_areas, len(names))
        return cls(**{name: block[:, j] for j, name in enumerate(names)})

    def area(self, i: int) -> AreaState:
        return AreaState(**{name: float(getattr(self, name)[i]) for name in self.field_names})

    def replace(self, **changes) -> "NetworkState":
        return replace(self, **changes)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.to_vector())))


@dataclass(frozen=True, eq=False)
class NetworkInput:
    """Control inputs of all areas (turbine commands in the turbine variant)."""
    d_p_disp: np.ndarray
    p_c: np.ndarray
    p_d: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.d_p_disp).reshape(-1).shape[0]
        for name in INPUT_FIELDS:
            object.__setattr__(self, name, _frozen_array(getattr(self, name), name, n))

    @classmethod
    def zeros(cls, n_areas: int) -> "NetworkInput":
        zero = np.zeros(n_areas)
        return cls(d_p_disp=zero, p_c=zero, p_d=zero)

    @property
    def n_areas(self) -> int:
        return self.d_p_disp.shape[0]

    def to_vector(self) -> np.ndarray:
        return np.column_stack([self.d_p_disp, self.p_c, self.p_d]).reshape(-1)

    @classmethod
    def from_vector(cls, vector, n_areas: int) -> "NetworkInput":
        vec = np.asarray(vector, dtype=float).reshape(-1)
        if vec.shape[0] != 3 * n_areas:
            raise DimensionError(f"Input vector has {vec.shape[0]} entries, expected {3 * n_areas}")
        block = vec.reshape(n_areas, 3)
        return cls(d_p_disp=block[:, 0], p_c=block[:, 1], p_d=block[:, 2])

    def area(self, i: int) -> AreaInput:
        return AreaInput(float(self.d_p_disp[i]), float(self.p_c[i]), float(self.p_d[i]))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.to_vector())))


@dataclass(frozen=True, eq=False)
class NetworkExogenous:
    """Load and renewable deviations of all areas at one step."""
    d_p_load: np.ndarray
    d_p_ren: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.d_p_load).reshape(-1).shape[0]
        for name in EXOGENOUS_FIELDS:
            object.__setattr__(self, name, _frozen_array(getattr(self, name), name, n))

    @classmethod
    def zeros(cls, n_areas: int) -> "NetworkExogenous":
        zero = np.zeros(n_areas)
        return cls(d_p_load=zero, d_p_ren=zero)

    @classmethod
    def from_areas(cls, areas) -> "NetworkExogenous":
        return cls(
            d_p_load=[a.d_p_load for a in areas],
            d_p_ren=[a.d_p_ren for a in areas],
        )

    @property
    def n_areas(self) -> int:
        return self.d_p_load.shape[0]

    def to_vector(self) -> np.ndarray:
        return np.column_stack([self.d_p_load, self.d_p_ren]).reshape(-1)

    def area(self, i: int) -> AreaExogenous:
        return AreaExogenous(float(self.d_p_load[i]), float(self.d_p_ren[i]))
