"""
State and input constraint boxes and violation checking.

States are never clamped; violations are computed and reported so that
controllers which break the bounds can be compared.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from gridbench.app.core.errors import ConfigurationError, DimensionError, NonFiniteValueError
from gridbench.app.models.network import AreaParams
from gridbench.app.models.state import NetworkInput, NetworkState

# Dispatchable capacity can be allocated over one hour of 1440 steps
INPUT_STEPS_PER_CAPACITY = 1440.0

D_DELTA_LIMIT = 30.0
D_F_LIMIT = 0.04

Bounds = Tuple[float, float]


class ConstraintSet(BaseModel):
    """Closed boxes on the states and inputs of one area."""

    model_config = ConfigDict(frozen=True)

    d_delta_bounds: Bounds = (-D_DELTA_LIMIT, D_DELTA_LIMIT)
    d_f_bounds: Bounds = (-D_F_LIMIT, D_F_LIMIT)
    e_bounds: Bounds = (0.0, 0.0)
    d_p_disp_bounds: Bounds = (0.0, 0.0)
    p_c_bounds: Bounds = (0.0, 0.0)
    p_d_bounds: Bounds = (0.0, 0.0)
    # Enforced only in augmented mode
    p_disp_total_bounds: Bounds = (0.0, 0.0)

    @model_validator(mode="after")
    def check_ordered(self):
        for name, (lower, upper) in self.items():
            if lower > upper:
                raise ValueError(f"{name}: lower bound {lower} exceeds upper bound {upper}")
        return self

    def items(self) -> List[Tuple[str, Bounds]]:
        return [(name, getattr(self, name)) for name in type(self).model_fields]

    @property
    def state_bounds(self) -> Dict[str, Bounds]:
        return {
            "d_delta": self.d_delta_bounds,
            "d_f": self.d_f_bounds,
            "e": self.e_bounds,
        }

    @property
    def input_bounds(self) -> Dict[str, Bounds]:
        return {
            "d_p_disp": self.d_p_disp_bounds,
            "p_c": self.p_c_bounds,
            "p_d": self.p_d_bounds,
        }


def constraint_set(params: AreaParams) -> ConstraintSet:
    """Boxes implied by the capacity of one area."""
    if params.p_disp_max < 0:
        raise ConfigurationError(f"p_disp_max must be nonnegative, got {params.p_disp_max}")
    limit = params.p_disp_max / INPUT_STEPS_PER_CAPACITY
    return ConstraintSet(
        e_bounds=(0.0, params.e_max),
        d_p_disp_bounds=(-limit, limit),
        p_c_bounds=(0.0, limit),
        p_d_bounds=(0.0, limit),
        p_disp_total_bounds=(0.0, params.p_disp_max),
    )


@dataclass(frozen=True)
class Violation:
    """One bound violation; magnitude is positive above the upper bound, negative below the lower."""
    area: int
    quantity: str
    magnitude: float

    @property
    def kind(self) -> str:
        return f"{self.quantity}_{'upper' if self.magnitude > 0 else 'lower'}"


@dataclass
class ViolationReport:
    violations: List[Violation] = field(default_factory=list)

    def __bool__(self) -> bool:
        return bool(self.violations)

    def __len__(self) -> int:
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    @property
    def is_empty(self) -> bool:
        return not self.violations

    def by_kind(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for violation in self.violations:
            counts[violation.kind] = counts.get(violation.kind, 0) + 1
        return counts

    def areas_with(self, quantity: str) -> List[int]:
        return sorted({v.area for v in self.violations if v.quantity == quantity})


def _signed_excess(values: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    return np.where(values > upper, values - upper, np.where(values < lower, values - lower, 0.0))


def check_violations(
    state: NetworkState,
    inputs: NetworkInput,
    sets: Sequence[ConstraintSet],
    include_total_dispatch: Optional[bool] = None,
) -> ViolationReport:
    """
    Report every scalar outside its closed box.

    The total-dispatch box is checked when the state carries the augmented
    fields, unless include_total_dispatch says otherwise. A NaN or infinite
    scalar lies in no box and raises NonFiniteValueError.
    """
    n = len(sets)
    if state.n_areas != n or inputs.n_areas != n:
        raise DimensionError(
            f"State has {state.n_areas} areas, input {inputs.n_areas}, constraint sets {n}"
        )
    if include_total_dispatch is None:
        include_total_dispatch = state.augmented

    checks = [
        ("d_delta", state.d_delta, "d_delta_bounds"),
        ("d_f", state.d_f, "d_f_bounds"),
        ("e", state.e, "e_bounds"),
        ("d_p_disp", inputs.d_p_disp, "d_p_disp_bounds"),
        ("p_c", inputs.p_c, "p_c_bounds"),
        ("p_d", inputs.p_d, "p_d_bounds"),
    ]
    if include_total_dispatch and state.p_disp is not None:
        checks.append(("p_disp", state.p_disp, "p_disp_total_bounds"))

    report = ViolationReport()
    for quantity, values, attr in checks:
        lower = np.array([getattr(s, attr)[0] for s in sets])
        upper = np.array([getattr(s, attr)[1] for s in sets])
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            raise NonFiniteValueError(f"{quantity} of area {int(bad[0])} is not finite: {values[bad[0]]}")
        excess = _signed_excess(values, lower, upper)
        for area in np.flatnonzero(excess):
            report.violations.append(Violation(int(area), quantity, float(excess[area])))
    report.violations.sort(key=lambda v: (v.area, v.quantity))
    return report
