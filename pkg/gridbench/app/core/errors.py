"""
Error hierarchy for the benchmark.

Every error carries the exit code the command-line interface reports for it.
"""

from typing import Optional


class GridBenchError(Exception):
    """Base class for all benchmark errors."""

    exit_code: int = 1


class ConfigurationError(GridBenchError):
    """Invalid run configuration or parameter set."""

    exit_code = 3


class ScenarioNotFoundError(ConfigurationError):
    """Scenario file does not exist."""

    exit_code = 3


class UnknownControllerError(GridBenchError):
    """Controller name is not registered."""

    exit_code = 4

    def __init__(self, name: str, registered):
        self.name = name
        self.registered = sorted(registered)
        super().__init__(
            f"Unknown controller '{name}'. Registered controllers: {', '.join(self.registered)}"
        )


class IncompatibleVariantError(ConfigurationError):
    """Controller cannot drive the selected model variant."""

    exit_code = 5


class ScenarioTooShortError(ConfigurationError):
    """Requested number of steps exceeds the scenario length."""

    exit_code = 6

    def __init__(self, requested: int, limit: int):
        self.requested = requested
        self.limit = limit
        super().__init__(
            f"Requested {requested} steps but the scenario covers at most {limit} steps"
        )


class ScenarioSchemaError(GridBenchError):
    """Scenario file does not match the documented schema."""

    exit_code = 7

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MalformedHeaderError(ScenarioSchemaError):
    """Header row is not iso,kind,p_disp_max,h01..h24."""


class UnknownAreaError(ScenarioSchemaError):
    """Row names an ISO code outside the network."""


class RowCountError(ScenarioSchemaError):
    """Rows are missing or duplicated."""


class NonNumericCellError(ScenarioSchemaError):
    """A non-empty cell cannot be parsed as a number."""


class CapacityMismatchError(ScenarioSchemaError):
    """Rows of one area disagree on p_disp_max."""


class NegativeLoadError(ScenarioSchemaError):
    """A load series contains a negative value."""


class InsufficientDataError(ScenarioSchemaError):
    """A series has fewer than two present entries and cannot be repaired."""


class DimensionError(GridBenchError, ValueError):
    """Array dimensions do not match the network."""


class NonFiniteValueError(GridBenchError, ValueError):
    """NaN or infinite value where a finite one is required."""


class ControllerContractError(GridBenchError):
    """Controller returned an input violating the contract."""

    exit_code = 8

    def __init__(self, step: int, message: str):
        self.step = step
        super().__init__(f"step {step}: {message}")


class RunLogError(GridBenchError):
    """Run log is missing or corrupt."""

    exit_code = 9


class SolverError(GridBenchError):
    """Internal failure of the QP solver or the MPC fallback path."""

    exit_code = 10
