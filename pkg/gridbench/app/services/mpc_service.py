"""
Model predictive control of the network.

The prediction model is a sparse linear system x+ = A x + B u + E w over
interleaved per-area vectors. The MPC problem keeps predicted states as
decision variables (no condensing):

    z = [x(1), ..., x(N), u(0), ..., u(N-1)]
    x(j) - A x(j-1) - B u(j-1) = E w(j),   x(0) = x_k moved to the right-hand side
    cost = sum_j x(j)' R x(j) + u(j-1)' Q u(j-1)

Only the right-hand side changes from one step to the next, so the matrix
template is built once per controller.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from gridbench.app.core.errors import DimensionError, SolverError
from gridbench.app.core.logging_config import get_logger
from gridbench.app.models.constraints import constraint_set
from gridbench.app.models.network import ModelVariant, NetworkParams, TurbineParams
from gridbench.app.models.state import (
    AUGMENTED_STATE_FIELDS,
    BASE_STATE_FIELDS,
    TURBINE_STATE_FIELDS,
    NetworkExogenous,
    NetworkInput,
    NetworkState,
)
from gridbench.app.models.topology import Topology, tie_power
from gridbench.app.schemas.run import MpcConfig
from gridbench.app.schemas.scenario import StepSignals
from gridbench.app.services.qp_solver import QpSolution, QpStatus, QuadraticProgram, solve_qp

logger = get_logger(__name__)

N_INPUTS = 3
N_EXOGENOUS = 2


@dataclass(frozen=True, eq=False)
class ExogenousWindow:
    """Spliced load and renewable deviations, arrays of shape (N, n_areas); row j-1 is stage j."""
    load: np.ndarray
    ren: np.ndarray

    @property
    def horizon(self) -> int:
        return self.load.shape[0]

    @property
    def n_areas(self) -> int:
        return self.load.shape[1]

    def stage(self, j: int) -> NetworkExogenous:
        return NetworkExogenous(d_p_load=self.load[j - 1], d_p_ren=self.ren[j - 1])

    def matrix(self) -> np.ndarray:
        """(N, 2*n_areas) with [load_i, ren_i] interleaved per area."""
        return np.stack([self.load, self.ren], axis=2).reshape(self.horizon, -1)

    def area(self, i: int, extra_load: float = 0.0) -> "ExogenousWindow":
        return ExogenousWindow(
            load=self.load[:, i:i + 1] + extra_load, ren=self.ren[:, i:i + 1].copy()
        )

    @classmethod
    def zeros(cls, horizon: int, n_areas: int) -> "ExogenousWindow":
        return cls(load=np.zeros((horizon, n_areas)), ren=np.zeros((horizon, n_areas)))


def splice_exogenous(k: int, signals: StepSignals, horizon: int) -> ExogenousWindow:
    """Measurement at k for stage 1, forecasts at k+j-1 for stages j >= 2, holding the last value."""
    if horizon < 1:
        raise DimensionError(f"Horizon must be at least 1, got {horizon}")
    last = signals.n_steps - 1
    k_now = min(k, last)
    forecast_rows = np.minimum(np.arange(k + 1, k + horizon), last)
    load = np.vstack([signals.load_meas[k_now][None, :], signals.load_for[forecast_rows]])
    ren = np.vstack([signals.ren_meas[k_now][None, :], signals.ren_for[forecast_rows]])
    return ExogenousWindow(load=load, ren=ren)


@dataclass(frozen=True, eq=False)
class PredictionModel:
    """Sparse prediction model with boxes and diagonal weights."""
    A: sparse.csc_matrix
    B: sparse.csc_matrix
    E: sparse.csc_matrix
    x_lb: np.ndarray
    x_ub: np.ndarray
    u_lb: np.ndarray
    u_ub: np.ndarray
    r_diag: np.ndarray
    q_diag: np.ndarray
    n_areas: int
    state_fields: Tuple[str, ...]
    variant: ModelVariant

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.B.shape[1]

    @property
    def states_per_area(self) -> int:
        return len(self.state_fields)

    def step(self, x, u, w) -> np.ndarray:
        return self.A @ x + self.B @ u + self.E @ w

    def rollout(self, x0, plan, window: ExogenousWindow) -> np.ndarray:
        """Predicted states x(1..N) as an (N, n_states) array."""
        plan = np.asarray(plan, dtype=float).reshape(window.horizon, self.n_inputs)
        w = window.matrix()
        states = np.empty((window.horizon, self.n_states))
        x = np.asarray(x0, dtype=float)
        for j in range(window.horizon):
            x = self.step(x, plan[j], w[j])
            states[j] = x
        return states


def build_prediction_model(
    topo: Topology,
    params: NetworkParams,
    variant: ModelVariant = ModelVariant.linear,
    cfg: Optional[MpcConfig] = None,
    turbine: Optional[TurbineParams] = None,
) -> PredictionModel:
    """
    Assemble A, B, E from triplets.

    The two-mode storage variant is predicted with the linear model. Extra
    augmented and turbine states carry zero weight.
    """
    cfg = cfg or MpcConfig()
    n = params.n_areas
    if topo.n_areas != n:
        raise DimensionError(f"Topology has {topo.n_areas} areas, parameters {n}")
    fields = BASE_STATE_FIELDS
    if variant == ModelVariant.augmented:
        fields = fields + AUGMENTED_STATE_FIELDS
    elif variant == ModelVariant.turbine:
        fields = fields + TURBINE_STATE_FIELDS
        turbine = turbine or TurbineParams()
    ns = len(fields)
    tau = params.tau
    laplacian = topo.laplacian().tocoo()

    a_rows, a_cols, a_vals = [], [], []
    b_rows, b_cols, b_vals = [], [], []
    e_rows, e_cols, e_vals = [], [], []

    def a(r, c, v):
        a_rows.append(r), a_cols.append(c), a_vals.append(v)

    def b(r, c, v):
        b_rows.append(r), b_cols.append(c), b_vals.append(v)

    def e(r, c, v):
        e_rows.append(r), e_cols.append(c), e_vals.append(v)

    gains = np.array([area.k_p / area.t_p for area in params.areas]) * tau
    for i, area in enumerate(params.areas):
        s = i * ns
        u = i * N_INPUTS
        w = i * N_EXOGENOUS
        d_delta, d_f, energy = s, s + 1, s + 2
        a(d_delta, d_delta, 1.0)
        a(d_delta, d_f, tau * 2.0 * np.pi)
        a(d_f, d_f, 1.0 - tau / area.t_p)
        a(energy, energy, 1.0)
        e(d_f, w, -gains[i])
        e(d_f, w + 1, gains[i])
        if variant == ModelVariant.turbine:
            disp, charge, discharge = s + 3, s + 4, s + 5
            a(d_f, disp, gains[i])
            a(d_f, charge, -gains[i])
            a(d_f, discharge, gains[i])
            a(energy, charge, tau * area.eta_c)
            a(energy, discharge, -tau / area.eta_d)
            for state, command, t, k in (
                (disp, u, turbine.t_t, turbine.k_t),
                (charge, u + 1, turbine.t_c, turbine.k_c),
                (discharge, u + 2, turbine.t_d, turbine.k_d),
            ):
                a(state, state, 1.0 - tau / t)
                b(state, command, tau * k / t)
        else:
            b(d_f, u, gains[i])
            b(d_f, u + 1, -gains[i])
            b(d_f, u + 2, gains[i])
            b(energy, u + 1, tau * area.eta_c)
            b(energy, u + 2, -tau / area.eta_d)
        if variant == ModelVariant.augmented:
            a(s + 3, s + 3, 1.0)
            b(s + 3, u, tau)
            a(s + 4, s + 4, 1.0)

    # Tie coupling through the angle Laplacian
    for i, j, value in zip(laplacian.row, laplacian.col, laplacian.data):
        a(i * ns + 1, j * ns, -gains[i] * value)
        if variant == ModelVariant.augmented:
            a(i * ns + 4, j * ns, tau * value)

    nx, nu, nw = n * ns, n * N_INPUTS, n * N_EXOGENOUS
    A = sparse.csc_matrix((a_vals, (a_rows, a_cols)), shape=(nx, nx))
    B = sparse.csc_matrix((b_vals, (b_rows, b_cols)), shape=(nx, nu))
    E = sparse.csc_matrix((e_vals, (e_rows, e_cols)), shape=(nx, nw))

    x_lb = np.full(nx, -np.inf)
    x_ub = np.full(nx, np.inf)
    u_lb = np.empty(nu)
    u_ub = np.empty(nu)
    r_diag = np.zeros(nx)
    q_diag = np.tile(np.asarray(cfg.q_weights, dtype=float), n)
    for i, area in enumerate(params.areas):
        box = constraint_set(area)
        s = i * ns
        for offset, bounds in enumerate((box.d_delta_bounds, box.d_f_bounds, box.e_bounds)):
            x_lb[s + offset], x_ub[s + offset] = bounds
            r_diag[s + offset] = cfg.r_weights[offset]
        input_boxes = (box.d_p_disp_bounds, box.p_c_bounds, box.p_d_bounds)
        for offset, bounds in enumerate(input_boxes):
            u_lb[i * N_INPUTS + offset], u_ub[i * N_INPUTS + offset] = bounds
        if variant == ModelVariant.augmented:
            x_lb[s + 3], x_ub[s + 3] = box.p_disp_total_bounds
        elif variant == ModelVariant.turbine:
            for offset, bounds in enumerate(input_boxes):
                x_lb[s + 3 + offset], x_ub[s + 3 + offset] = bounds

    return PredictionModel(
        A=A, B=B, E=E,
        x_lb=x_lb, x_ub=x_ub, u_lb=u_lb, u_ub=u_ub,
        r_diag=r_diag, q_diag=q_diag,
        n_areas=n, state_fields=fields, variant=variant,
    )


class MpcProblem:
    """
    Cached matrix template of the MPC QP for one model and horizon.

    In soft mode every predicted state is split as x = xb + s with xb kept
    in the state box and s free, penalized by soft_penalty * s's. Input
    boxes stay hard.
    """

    def __init__(self, model: PredictionModel, horizon: int, soft: bool = False, soft_penalty: float = 1e6):
        self.model = model
        self.horizon = horizon
        self.soft = soft
        nx, nu, N = model.n_states, model.n_inputs, horizon
        self.n_x = N * nx
        self.n_u = N * nu
        self.u_offset = (2 if soft else 1) * self.n_x

        identity = sparse.identity(N, format="csc")
        shift = sparse.eye(N, k=-1, format="csc")
        dyn_x = sparse.kron(identity, sparse.identity(nx)) - sparse.kron(shift, model.A)
        dyn_u = -sparse.kron(identity, model.B)
        R = sparse.kron(identity, sparse.diags(model.r_diag))
        Q = sparse.kron(identity, sparse.diags(model.q_diag))

        x_lb = np.tile(model.x_lb, N)
        x_ub = np.tile(model.x_ub, N)
        u_lb = np.tile(model.u_lb, N)
        u_ub = np.tile(model.u_ub, N)
        if soft:
            penalty = soft_penalty * sparse.identity(self.n_x)
            self.H = 2.0 * sparse.bmat(
                [[R, R, None], [R, R + penalty, None], [None, None, Q]], format="csc"
            )
            self.A_eq = sparse.hstack([dyn_x, dyn_x, dyn_u], format="csc")
            free = np.full(self.n_x, np.inf)
            self.lb = np.concatenate([x_lb, -free, u_lb])
            self.ub = np.concatenate([x_ub, free, u_ub])
        else:
            self.H = 2.0 * sparse.block_diag([R, Q], format="csc")
            self.A_eq = sparse.hstack([dyn_x, dyn_u], format="csc")
            self.lb = np.concatenate([x_lb, u_lb])
            self.ub = np.concatenate([x_ub, u_ub])
        self.g = np.zeros(self.H.shape[0])

    @property
    def n_variables(self) -> int:
        return self.H.shape[0]

    @property
    def n_rows(self) -> int:
        return self.A_eq.shape[0]

    def rhs(self, x_k, window: ExogenousWindow) -> np.ndarray:
        if window.horizon != self.horizon:
            raise DimensionError(f"Window has {window.horizon} stages, horizon is {self.horizon}")
        w = window.matrix()
        b = (self.model.E @ w.T).T
        b[0] += self.model.A @ np.asarray(x_k, dtype=float)
        return b.reshape(-1)

    def qp(self, x_k, window: ExogenousWindow) -> QuadraticProgram:
        return QuadraticProgram(
            H=self.H, g=self.g, A_eq=self.A_eq, b_eq=self.rhs(x_k, window), lb=self.lb, ub=self.ub
        )

    def states(self, z: np.ndarray) -> np.ndarray:
        """Predicted states x(1..N) as (N, n_states)."""
        x = z[: self.n_x]
        if self.soft:
            x = x + z[self.n_x: 2 * self.n_x]
        return x.reshape(self.horizon, -1)

    def plan(self, z: np.ndarray) -> np.ndarray:
        """Input plan u(0..N-1) as (N, n_inputs), clipped to the input boxes."""
        u = z[self.u_offset: self.u_offset + self.n_u]
        return np.clip(u, np.tile(self.model.u_lb, self.horizon), np.tile(self.model.u_ub, self.horizon)).reshape(
            self.horizon, -1
        )

    def shifted(self, z: np.ndarray) -> np.ndarray:
        """Shift a solution one stage forward, repeating the last stage."""
        blocks = []
        nx, nu = self.model.n_states, self.model.n_inputs
        spans = [(0, self.n_x, nx)]
        if self.soft:
            spans.append((self.n_x, 2 * self.n_x, nx))
        spans.append((self.u_offset, self.u_offset + self.n_u, nu))
        for start, stop, width in spans:
            block = z[start:stop].reshape(self.horizon, width)
            blocks.append(np.vstack([block[1:], block[-1:]]).reshape(-1))
        return np.concatenate(blocks)

    def shifted_duals(self, y: np.ndarray) -> np.ndarray:
        block = y.reshape(self.horizon, -1)
        return np.vstack([block[1:], block[-1:]]).reshape(-1)


def build_mpc_qp(
    x_k: NetworkState,
    window: ExogenousWindow,
    topo: Topology,
    params: NetworkParams,
    cfg: Optional[MpcConfig] = None,
    variant: ModelVariant = ModelVariant.linear,
    turbine: Optional[TurbineParams] = None,
    soft: Optional[bool] = None,
) -> QuadraticProgram:
    """Sparse MPC QP for one step."""
    cfg = cfg or MpcConfig()
    model = build_prediction_model(topo, params, variant, cfg, turbine)
    problem = MpcProblem(model, window.horizon, cfg.soften if soft is None else soft, cfg.soft_penalty)
    return problem.qp(x_k.to_vector(), window)


def open_loop_cost(
    model: PredictionModel,
    x_k,
    window: ExogenousWindow,
    plan,
    tol: float = 1e-7,
) -> Tuple[float, bool]:
    """Objective of an arbitrary input plan on the prediction model and whether it respects every box."""
    x0 = x_k.to_vector() if isinstance(x_k, NetworkState) else np.asarray(x_k, dtype=float)
    plan = np.asarray(plan, dtype=float).reshape(window.horizon, model.n_inputs)
    states = model.rollout(x0, plan, window)
    cost = float(np.sum(states ** 2 * model.r_diag) + np.sum(plan ** 2 * model.q_diag))

    def inside(values, lower, upper):
        slack = tol * (1.0 + np.abs(np.where(np.isfinite(upper), upper, 0.0)))
        return bool(np.all(values >= lower - slack) and np.all(values <= upper + slack))

    feasible = inside(states, model.x_lb, model.x_ub) and inside(plan, model.u_lb, model.u_ub)
    return cost, feasible


@dataclass
class StepDiagnostics:
    """What a controller reports about one step."""
    open_loop_cost: float = 0.0
    iterations: int = 0
    wall_time: float = 0.0
    status: str = QpStatus.optimal.value
    softened: bool = False
    plan: Optional[np.ndarray] = None
    area_status: List[str] = field(default_factory=list)


class CentralizedMpc:
    """Receding-horizon solver with cached templates, warm start and soft fallback."""

    def __init__(self, model: PredictionModel, cfg: MpcConfig):
        self.model = model
        self.cfg = cfg
        self.hard = MpcProblem(model, cfg.horizon, soft=cfg.soften, soft_penalty=cfg.soft_penalty)
        self._soft: Optional[MpcProblem] = self.hard if cfg.soften else None
        self._warm: dict = {}

    @property
    def soft(self) -> MpcProblem:
        if self._soft is None:
            self._soft = MpcProblem(self.model, self.cfg.horizon, soft=True, soft_penalty=self.cfg.soft_penalty)
        return self._soft

    def reset(self) -> None:
        self._warm.clear()

    def _solve(self, problem: MpcProblem, x_k, window) -> Tuple[QuadraticProgram, QpSolution]:
        qp = problem.qp(x_k, window)
        warm = self._warm.get(id(problem)) if self.cfg.warm_start else None
        sol = solve_qp(
            qp,
            tol_prim=self.cfg.tol_prim,
            tol_dual=self.cfg.tol_dual,
            max_iter=self.cfg.max_iter,
            x0=None if warm is None else warm[0],
            y0=None if warm is None else warm[1],
        )
        if self.cfg.warm_start and sol.status != QpStatus.infeasible:
            self._warm[id(problem)] = (problem.shifted(sol.x), problem.shifted_duals(sol.y))
        return qp, sol

    def step(self, x_k, window: ExogenousWindow) -> Tuple[np.ndarray, StepDiagnostics]:
        """Solve once; returns u(0|k) as a vector and diagnostics."""
        started = time.perf_counter()
        problem = self.hard
        qp, sol = self._solve(problem, x_k, window)
        softened = problem.soft
        iterations = sol.iterations
        if sol.status != QpStatus.optimal and not problem.soft:
            logger.warning("MPC problem not solved, retrying with softened state bounds", status=sol.status.value)
            problem = self.soft
            qp, sol = self._solve(problem, x_k, window)
            softened = True
            iterations += sol.iterations
        if sol.status == QpStatus.infeasible:
            raise SolverError("Softened MPC problem reported infeasible")
        if sol.status != QpStatus.optimal:
            logger.warning("MPC solver stopped before convergence", status=sol.status.value)
        plan = problem.plan(sol.x)
        diagnostics = StepDiagnostics(
            open_loop_cost=qp.objective(sol.x),
            iterations=iterations,
            wall_time=time.perf_counter() - started,
            status=sol.status.value,
            softened=softened,
            plan=plan,
        )
        return plan[0].copy(), diagnostics


def centralized_step(
    k: int,
    x_k: NetworkState,
    signals: StepSignals,
    topo: Topology,
    params: NetworkParams,
    cfg: Optional[MpcConfig] = None,
    variant: ModelVariant = ModelVariant.linear,
    turbine: Optional[TurbineParams] = None,
    solver: Optional[CentralizedMpc] = None,
) -> Tuple[NetworkInput, StepDiagnostics]:
    """Apply the first input of the network-wide optimal plan."""
    cfg = cfg or MpcConfig()
    if solver is None:
        solver = CentralizedMpc(build_prediction_model(topo, params, variant, cfg, turbine), cfg)
    window = splice_exogenous(k, signals, cfg.horizon)
    u, diagnostics = solver.step(x_k.to_vector(), window)
    return NetworkInput.from_vector(u, params.n_areas), diagnostics


class DecentralizedMpc:
    """
    One independent MPC per area.

    Each area predicts with its own dynamics only; the tie power measured at
    the current step is held over the horizon and treated as extra load.
    """

    def __init__(
        self,
        topo: Topology,
        params: NetworkParams,
        cfg: MpcConfig,
        variant: ModelVariant = ModelVariant.linear,
        turbine: Optional[TurbineParams] = None,
        workers: int = 1,
    ):
        self.topo = topo
        self.params = params
        self.cfg = cfg
        self.workers = max(1, int(workers))
        self.local: List[CentralizedMpc] = []
        for code in params.area_codes:
            local_topo = Topology([code], [])
            local_params = params.subset([code])
            model = build_prediction_model(local_topo, local_params, variant, cfg, turbine)
            self.local.append(CentralizedMpc(model, cfg))
        self.states_per_area = self.local[0].model.states_per_area if self.local else 0

    def reset(self) -> None:
        for local in self.local:
            local.reset()

    def step(self, x_k: NetworkState, window: ExogenousWindow) -> Tuple[np.ndarray, StepDiagnostics]:
        started = time.perf_counter()
        x = x_k.to_vector().reshape(self.params.n_areas, -1)
        frozen_tie = tie_power(x_k.d_delta, self.topo)

        def solve_area(i: int):
            return self.local[i].step(x[i], window.area(i, extra_load=frozen_tie[i]))

        indices = range(self.params.n_areas)
        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                results = list(pool.map(solve_area, indices))
        else:
            results = [solve_area(i) for i in indices]

        u = np.concatenate([r[0] for r in results])
        plans = [r[1].plan for r in results]
        statuses = [r[1].status for r in results]
        worst = QpStatus.optimal.value
        if any(s != QpStatus.optimal.value for s in statuses):
            worst = next(s for s in statuses if s != QpStatus.optimal.value)
        diagnostics = StepDiagnostics(
            open_loop_cost=float(sum(r[1].open_loop_cost for r in results)),
            iterations=int(sum(r[1].iterations for r in results)),
            wall_time=time.perf_counter() - started,
            status=worst,
            softened=any(r[1].softened for r in results),
            plan=np.hstack(plans) if plans else None,
            area_status=statuses,
        )
        return u, diagnostics


def decentralized_step(
    k: int,
    x_k: NetworkState,
    signals: StepSignals,
    topo: Topology,
    params: NetworkParams,
    cfg: Optional[MpcConfig] = None,
    variant: ModelVariant = ModelVariant.linear,
    turbine: Optional[TurbineParams] = None,
    solver: Optional[DecentralizedMpc] = None,
    workers: int = 1,
) -> Tuple[NetworkInput, StepDiagnostics]:
    """Apply the first inputs of the independent per-area plans."""
    cfg = cfg or MpcConfig()
    if solver is None:
        solver = DecentralizedMpc(topo, params, cfg, variant, turbine, workers)
    window = splice_exogenous(k, signals, cfg.horizon)
    u, diagnostics = solver.step(x_k, window)
    return NetworkInput.from_vector(u, params.n_areas), diagnostics


def plan_to_inputs(plan: np.ndarray, n_areas: int) -> Sequence[NetworkInput]:
    return [NetworkInput.from_vector(row, n_areas) for row in np.asarray(plan)]
