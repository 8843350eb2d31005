"""
Controller plug-in contract and registry.

A controller is constructed once per run from a ControllerContext and then
asked for an input at every step. Third-party controllers subclass
Controller and register under a name with @register_controller.
"""

import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, ClassVar, Dict, FrozenSet, Optional, Tuple, Type

import numpy as np

from gridbench.app.core.errors import IncompatibleVariantError, UnknownControllerError
from gridbench.app.core.logging_config import get_logger
from gridbench.app.models.network import ModelVariant, NetworkParams, TurbineParams
from gridbench.app.models.state import NetworkInput, NetworkState
from gridbench.app.models.topology import Topology
from gridbench.app.schemas.run import MpcConfig
from gridbench.app.services.mpc_service import (
    CentralizedMpc,
    DecentralizedMpc,
    ExogenousWindow,
    StepDiagnostics,
    build_prediction_model,
)

logger = get_logger(__name__)


@dataclass(frozen=True)
class ControllerContext:
    """What a controller may know about the network it drives."""
    topo: Topology
    params: NetworkParams
    variant: ModelVariant = ModelVariant.linear
    mpc: MpcConfig = MpcConfig()
    turbine: Optional[TurbineParams] = None
    workers: int = 1


class Controller(ABC):
    """Base class for all controllers."""

    name: ClassVar[str] = ""
    supported_variants: ClassVar[FrozenSet[ModelVariant]] = frozenset(ModelVariant)

    def __init__(self, context: ControllerContext):
        self.context = context

    @property
    def n_areas(self) -> int:
        return self.context.params.n_areas

    def reset(self) -> None:
        """Forget state carried between steps (warm starts and the like)."""

    @abstractmethod
    def observe(
        self, k: int, state: NetworkState, window: ExogenousWindow
    ) -> Tuple[NetworkInput, StepDiagnostics]:
        """Return the input to apply at step k and a self-report of the step."""


_REGISTRY: Dict[str, Type[Controller]] = {}


def register_controller(name: str) -> Callable[[Type[Controller]], Type[Controller]]:
    """Class decorator adding a controller to the registry."""

    def decorator(cls: Type[Controller]) -> Type[Controller]:
        if name in _REGISTRY and _REGISTRY[name] is not cls:
            raise ValueError(f"Controller '{name}' is already registered")
        cls.name = name
        _REGISTRY[name] = cls
        return cls

    return decorator


def registered_controllers() -> Tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def controller_class(name: str) -> Type[Controller]:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise UnknownControllerError(name, _REGISTRY) from None


def create_controller(name: str, context: ControllerContext) -> Controller:
    """Instantiate a registered controller after checking it supports the variant."""
    cls = controller_class(name)
    if context.variant not in cls.supported_variants:
        raise IncompatibleVariantError(
            f"Controller '{name}' does not support the {context.variant.value} model variant"
        )
    controller = cls(context)
    logger.info("Controller created", controller=name, variant=context.variant.value, areas=context.params.n_areas)
    return controller


@register_controller("centralized")
class CentralizedController(Controller):
    """Network-wide MPC with the tie coupling inside the prediction model."""

    def __init__(self, context: ControllerContext):
        super().__init__(context)
        model = build_prediction_model(
            context.topo, context.params, context.variant, context.mpc, context.turbine
        )
        self.solver = CentralizedMpc(model, context.mpc)

    def reset(self) -> None:
        self.solver.reset()

    def observe(self, k, state, window):
        u, diagnostics = self.solver.step(state.to_vector(), window)
        return NetworkInput.from_vector(u, self.n_areas), diagnostics


@register_controller("decentralized")
class DecentralizedController(Controller):
    """Independent per-area MPC with tie power frozen over the horizon."""

    def __init__(self, context: ControllerContext):
        super().__init__(context)
        self.solver = DecentralizedMpc(
            context.topo,
            context.params,
            context.mpc,
            context.variant,
            context.turbine,
            context.workers,
        )

    def reset(self) -> None:
        self.solver.reset()

    def observe(self, k, state, window):
        u, diagnostics = self.solver.step(state, window)
        return NetworkInput.from_vector(u, self.n_areas), diagnostics


@register_controller("idle")
class IdleController(Controller):
    """Zero input at every step."""

    def observe(self, k, state, window):
        started = time.perf_counter()
        u = NetworkInput.zeros(self.n_areas)
        plan = np.zeros((window.horizon, 3 * self.n_areas))
        return u, StepDiagnostics(wall_time=time.perf_counter() - started, plan=plan)
