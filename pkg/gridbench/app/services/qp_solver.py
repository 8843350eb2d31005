"""
Sparse convex QP solver.

    minimize    1/2 x'Hx + g'x
    subject to  A_eq x = b_eq,  lb <= x <= ub

Primal-dual interior point method with Mehrotra predictor-corrector steps.
Bound multipliers follow the sign convention H x + g + A'y + z = 0 with
z <= 0 at an active lower bound and z >= 0 at an active upper bound.

Before iterating, fixed variables (lb == ub) are eliminated, equality rows
are checked against the box for an infeasibility certificate, and the KKT
matrix is equilibrated (Ruiz) with an extra cost scaling. Each iteration
factors the regularized quasi-definite KKT system once with SuperLU and
reuses it for the predictor and the corrector.

Infeasibility is reported only with a proof: a single row that the box cannot
reach, or a Farkas direction read off the equality multipliers. A feasible
problem that does not converge ends with max_iter.
"""

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Optional

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from gridbench.app.core.errors import DimensionError, NonFiniteValueError, RunLogError, SolverError
from gridbench.app.core.logging_config import get_logger
from gridbench.app.utils.files import atomic_writer

logger = get_logger(__name__)

DUMP_FORMAT_VERSION = 1
DUMP_HEADER = "# gridbench-qp"

FIXED_TOL = 1e-12
STEP_TO_BOUNDARY = 0.995
REGULARIZATION = 1e-9
REFINEMENT_STEPS = 3
RUIZ_ITERATIONS = 10
SCALE_CLIP = (1e-4, 1e4)


class QpStatus(str, Enum):
    optimal = "optimal"
    max_iter = "max_iter"
    infeasible = "infeasible"


def _as_csc(matrix, shape) -> sparse.csc_matrix:
    if matrix is None:
        return sparse.csc_matrix(shape)
    out = sparse.csc_matrix(matrix, dtype=float)
    out.sum_duplicates()
    out.eliminate_zeros()
    return out


def _vector(values, n: int, name: str, fill: float = 0.0) -> np.ndarray:
    if values is None:
        return np.full(n, fill)
    out = np.array(values, dtype=float).reshape(-1)
    if out.shape[0] != n:
        raise DimensionError(f"{name} has {out.shape[0]} entries, expected {n}")
    return out


@dataclass(frozen=True, eq=False)
class QuadraticProgram:
    """Sparse convex QP with equality constraints and box bounds."""
    H: sparse.csc_matrix
    g: np.ndarray
    A_eq: sparse.csc_matrix
    b_eq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        H = self.H if sparse.issparse(self.H) else sparse.csc_matrix(np.atleast_2d(self.H))
        n = H.shape[0]
        if H.shape != (n, n):
            raise DimensionError(f"H must be square, got {H.shape}")
        A = self.A_eq
        if A is None or (not sparse.issparse(A) and np.size(A) == 0):
            A = sparse.csc_matrix((0, n))
        A = _as_csc(A, (0, n))
        if A.shape[1] != n:
            raise DimensionError(f"A_eq has {A.shape[1]} columns, expected {n}")
        m = A.shape[0]
        object.__setattr__(self, "H", _as_csc(H, (n, n)))
        object.__setattr__(self, "A_eq", A)
        object.__setattr__(self, "g", _vector(self.g, n, "g"))
        object.__setattr__(self, "b_eq", _vector(self.b_eq, m, "b_eq"))
        object.__setattr__(self, "lb", _vector(self.lb, n, "lb", -np.inf))
        object.__setattr__(self, "ub", _vector(self.ub, n, "ub", np.inf))

        for name in ("g", "b_eq"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise NonFiniteValueError(f"{name} must be finite")
        if not np.all(np.isfinite(self.H.data)) or not np.all(np.isfinite(self.A_eq.data)):
            raise NonFiniteValueError("H and A_eq must be finite")
        if np.any(np.isnan(self.lb)) or np.any(np.isnan(self.ub)):
            raise NonFiniteValueError("Bounds must not be NaN")
        if np.any(self.lb > self.ub):
            raise DimensionError("lb must not exceed ub")
        asym = abs(self.H - self.H.T)
        scale = max(1.0, abs(self.H).max() if self.H.nnz else 0.0)
        if asym.nnz and asym.max() > 1e-12 * scale:
            raise DimensionError("H must be symmetric")
        if np.any(self.H.diagonal() < 0):
            raise DimensionError("H has a negative diagonal entry and cannot be positive semidefinite")

    @property
    def n(self) -> int:
        return self.H.shape[0]

    @property
    def m(self) -> int:
        return self.A_eq.shape[0]

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ (self.H @ x) + self.g @ x)

    @classmethod
    def create(cls, H, g=None, A_eq=None, b_eq=None, lb=None, ub=None) -> "QuadraticProgram":
        """Build a QP from dense or sparse pieces; missing parts default to empty or unbounded."""
        H = H if sparse.issparse(H) else sparse.csc_matrix(np.atleast_2d(np.asarray(H, dtype=float)))
        n = H.shape[0]
        if A_eq is None:
            A_eq = sparse.csc_matrix((0, n))
        elif not sparse.issparse(A_eq):
            A_eq = sparse.csc_matrix(np.atleast_2d(np.asarray(A_eq, dtype=float)))
        if b_eq is None:
            b_eq = np.zeros(A_eq.shape[0])
        return cls(H=H, g=g, A_eq=A_eq, b_eq=b_eq, lb=lb, ub=ub)


@dataclass
class QpSolution:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    status: QpStatus
    r_prim: float
    r_dual: float
    iterations: int
    r_comp: float = 0.0
    objective: float = float("nan")

    @property
    def is_optimal(self) -> bool:
        return self.status == QpStatus.optimal


def _inf_norm(v) -> float:
    v = np.asarray(v)
    return float(np.max(np.abs(v))) if v.size else 0.0


def _residuals(qp: QuadraticProgram, x, y, z) -> Dict[str, float]:
    Ax = qp.A_eq @ x
    r_eq = _inf_norm(Ax - qp.b_eq) / (1.0 + max(_inf_norm(Ax), _inf_norm(qp.b_eq)))
    excess = np.maximum(np.maximum(qp.lb - x, x - qp.ub), 0.0)
    r_bound = _inf_norm(excess) / (1.0 + _inf_norm(x))
    Hx = qp.H @ x
    ATy = qp.A_eq.T @ y
    r_dual = _inf_norm(Hx + qp.g + ATy + z) / (
        1.0 + max(_inf_norm(Hx), _inf_norm(qp.g), _inf_norm(ATy), _inf_norm(z))
    )
    with np.errstate(invalid="ignore"):
        gap_l = np.where(z < 0, -z * (x - qp.lb), 0.0)
        gap_u = np.where(z > 0, z * (qp.ub - x), 0.0)
    comp = np.maximum(np.nan_to_num(gap_l, nan=np.inf), np.nan_to_num(gap_u, nan=np.inf))
    r_comp = _inf_norm(comp) / (1.0 + max(_inf_norm(x), _inf_norm(z)))
    return {"r_eq": r_eq, "r_bound": r_bound, "r_prim": max(r_eq, r_bound), "r_dual": r_dual, "r_comp": r_comp}


@dataclass
class _Reduced:
    """Problem after fixed-variable elimination and removal of empty rows."""
    qp: QuadraticProgram
    free: np.ndarray
    fixed: np.ndarray
    x_fixed: np.ndarray
    rows: np.ndarray
    infeasible_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))


def _reduce(qp: QuadraticProgram) -> _Reduced:
    width = qp.ub - qp.lb
    is_fixed = np.isfinite(width) & (width <= FIXED_TOL * np.maximum(1.0, np.abs(qp.lb)))
    free = np.flatnonzero(~is_fixed)
    fixed = np.flatnonzero(is_fixed)
    x_fixed = qp.lb[fixed].copy()

    A_free = qp.A_eq[:, free]
    b = qp.b_eq - qp.A_eq[:, fixed] @ x_fixed
    g = qp.g[free] + qp.H[free][:, fixed] @ x_fixed

    # Rows with no free variable must already hold
    nnz_per_row = np.diff(A_free.tocsr().indptr)
    empty = nnz_per_row == 0
    scale = 1.0 + np.maximum(np.abs(qp.b_eq), np.abs(qp.A_eq[:, fixed] @ x_fixed))
    bad_empty = np.flatnonzero(empty & (np.abs(b) > 1e-9 * scale))
    rows = np.flatnonzero(~empty)

    reduced = QuadraticProgram(
        H=qp.H[free][:, free],
        g=g,
        A_eq=A_free.tocsr()[rows].tocsc(),
        b_eq=b[rows],
        lb=qp.lb[free],
        ub=qp.ub[free],
    )
    return _Reduced(reduced, free, fixed, x_fixed, rows, bad_empty)


def _row_bound_infeasible(qp: QuadraticProgram, tol: float) -> bool:
    """True if some equality row cannot be met anywhere inside the box."""
    if qp.m == 0:
        return False
    A = qp.A_eq.tocsr()
    pos = A.maximum(0)
    neg = A.minimum(0)
    with np.errstate(invalid="ignore"):
        lb = qp.lb
        ub = qp.ub
        row_max = pos @ np.where(np.isinf(ub), 0.0, ub) + neg @ np.where(np.isinf(lb), 0.0, lb)
        row_min = pos @ np.where(np.isinf(lb), 0.0, lb) + neg @ np.where(np.isinf(ub), 0.0, ub)
    unbounded_above = (pos @ np.isinf(ub).astype(float) + (-neg) @ np.isinf(lb).astype(float)) > 0
    unbounded_below = (pos @ np.isinf(lb).astype(float) + (-neg) @ np.isinf(ub).astype(float)) > 0
    slack = tol * (1.0 + np.abs(qp.b_eq))
    too_high = ~unbounded_above & (qp.b_eq > row_max + slack)
    too_low = ~unbounded_below & (qp.b_eq < row_min - slack)
    return bool(np.any(too_high | too_low))


def _box_support(a: np.ndarray, lb: np.ndarray, ub: np.ndarray) -> float:
    """max a'x over lb <= x <= ub; inf when the box is open in a direction a points to."""
    up = a > 0
    down = a < 0
    if np.any(up & np.isinf(ub)) or np.any(down & np.isinf(lb)):
        return np.inf
    return float(a[up] @ ub[up] + a[down] @ lb[down])


def _farkas_certificate(qp: QuadraticProgram, y: np.ndarray, tol: float) -> bool:
    """
    True if y proves that A_eq x = b_eq has no solution inside the box.

    For a feasible problem every y satisfies y'b <= max over the box of y'A x,
    so a strict violation of that inequality (in either sign of y) is a proof.
    The direction of the equality multipliers of a diverging iterate is the
    natural candidate.
    """
    size = _inf_norm(y)
    if qp.m == 0 or size == 0.0 or not np.isfinite(size):
        return False
    y = y / size
    a = np.asarray(qp.A_eq.T @ y).reshape(-1)
    target = float(y @ qp.b_eq)
    for sign in (1.0, -1.0):
        support = _box_support(sign * a, qp.lb, qp.ub)
        if not np.isfinite(support):
            continue
        if sign * target - support > tol * (1.0 + abs(target) + abs(support)):
            return True
    return False


def _ruiz(H: sparse.csc_matrix, A: sparse.csc_matrix, g: np.ndarray, iterations: int):
    """Return scaling vectors D (columns), E (rows) and cost factor c."""
    n, m = H.shape[0], A.shape[0]
    D = np.ones(n)
    E = np.ones(m)
    Hs, As = H.copy(), A.copy()
    for _ in range(iterations):
        col_H = np.asarray(abs(Hs).max(axis=0).todense()).reshape(-1) if Hs.nnz else np.zeros(n)
        col_A = np.asarray(abs(As).max(axis=0).todense()).reshape(-1) if As.nnz else np.zeros(n)
        row_A = np.asarray(abs(As).max(axis=1).todense()).reshape(-1) if As.nnz else np.zeros(m)
        col = np.maximum(col_H, col_A)
        col[col < 1e-8] = 1.0
        row_A[row_A < 1e-8] = 1.0
        d = np.clip(1.0 / np.sqrt(col), *SCALE_CLIP)
        e = np.clip(1.0 / np.sqrt(row_A), *SCALE_CLIP)
        Dd = sparse.diags(d)
        Hs = (Dd @ Hs @ Dd).tocsc()
        As = (sparse.diags(e) @ As @ Dd).tocsc()
        D *= d
        E *= e
    g_scaled = D * g
    col_H = np.asarray(abs(Hs).max(axis=0).todense()).reshape(-1) if Hs.nnz else np.zeros(n)
    spread = max(float(np.mean(col_H)) if n else 0.0, _inf_norm(g_scaled))
    c = 1.0 / spread if spread > 1e-8 else 1.0
    c = float(np.clip(c, *SCALE_CLIP))
    return D, E, c, (c * Hs).tocsc(), As, c * g_scaled


def _interior_start(x, lb, ub):
    """Move x strictly inside the box."""
    width = ub - lb
    push = np.where(np.isfinite(width), np.minimum(1.0, 0.1 * width), 1.0)
    lo = np.where(np.isfinite(lb), lb + push, -np.inf)
    hi = np.where(np.isfinite(ub), ub - push, np.inf)
    return np.clip(x, lo, hi)


def _max_step(v, dv) -> float:
    """Largest alpha in [0, 1] with v + alpha*dv >= 0."""
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-v[neg] / dv[neg])))


def _interior_point(
    qp: QuadraticProgram,
    tol_prim: float,
    tol_dual: float,
    max_iter: int,
    x0: Optional[np.ndarray],
    y0: Optional[np.ndarray],
):
    """Solve a reduced QP (no fixed variables, no empty rows). Returns (x, y, z, status, iterations)."""
    n, m = qp.n, qp.m
    D, E, c, H, A, g = _ruiz(qp.H, qp.A_eq, qp.g, RUIZ_ITERATIONS)
    b = E * qp.b_eq
    lb = qp.lb / D
    ub = qp.ub / D
    has_l = np.isfinite(lb)
    has_u = np.isfinite(ub)
    n_bounds = int(has_l.sum() + has_u.sum())
    AT = A.T.tocsc()

    def slacks(x_s):
        s_l = np.where(has_l, x_s - np.where(has_l, lb, 0.0), 1.0)
        s_u = np.where(has_u, np.where(has_u, ub, 0.0) - x_s, 1.0)
        return s_l, s_u

    def unscale(x_s, y_s, zl, zu):
        return D * x_s, E * y_s / c, (zu - zl) / (c * D)

    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float) / D
    x = _interior_start(x, lb, ub)
    y = np.zeros(m) if y0 is None else np.asarray(y0, dtype=float) * c / E
    # Centred start: every bound pair begins with the same complementarity product
    s_l, s_u = slacks(x)
    mu0 = max(1.0, _inf_norm(H @ x + g + AT @ y))
    z_l = np.where(has_l, mu0 / s_l, 0.0)
    z_u = np.where(has_u, mu0 / s_u, 0.0)

    reg_lower = -REGULARIZATION * sparse.identity(m, format="csc")
    status = QpStatus.max_iter
    iteration = 0

    for iteration in range(max_iter + 1):
        s_l, s_u = slacks(x)
        mu = (float(s_l[has_l] @ z_l[has_l] + s_u[has_u] @ z_u[has_u]) / n_bounds) if n_bounds else 0.0

        xu, yu, zu_ = unscale(x, y, z_l, z_u)
        res = _residuals(qp, xu, yu, zu_)
        if res["r_prim"] <= tol_prim and res["r_dual"] <= tol_dual and res["r_comp"] <= tol_dual:
            status = QpStatus.optimal
            break
        if _farkas_certificate(qp, yu, tol_prim):
            status = QpStatus.infeasible
            break
        if iteration == max_iter:
            break

        r_d = H @ x + g + AT @ y - z_l + z_u
        r_p = A @ x - b
        sigma_diag = np.where(has_l, z_l / s_l, 0.0) + np.where(has_u, z_u / s_u, 0.0)

        upper = (H + sparse.diags(sigma_diag)).tocsc()
        K0 = sparse.bmat([[upper, AT], [A, None]], format="csc") if m else upper
        K = sparse.bmat(
            [[upper + REGULARIZATION * sparse.identity(n, format="csc"), AT], [A, reg_lower]],
            format="csc",
        ) if m else (upper + REGULARIZATION * sparse.identity(n, format="csc")).tocsc()
        try:
            lu = splinalg.splu(K, permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as e:
            raise SolverError(f"KKT factorization failed at iteration {iteration}: {e}") from e

        def solve(r_cl, r_cu):
            rhs1 = -r_d + np.where(has_l, r_cl / s_l, 0.0) - np.where(has_u, r_cu / s_u, 0.0)
            rhs = np.concatenate([rhs1, -r_p])
            sol = lu.solve(rhs)
            for _ in range(REFINEMENT_STEPS):
                sol = sol + lu.solve(rhs - K0 @ sol)
            dx, dy = sol[:n], sol[n:]
            dz_l = np.where(has_l, (r_cl - z_l * dx) / s_l, 0.0)
            dz_u = np.where(has_u, (r_cu + z_u * dx) / s_u, 0.0)
            return dx, dy, dz_l, dz_u

        def step_length(dx, dz_l, dz_u):
            return min(
                _max_step(s_l[has_l], dx[has_l]),
                _max_step(s_u[has_u], -dx[has_u]),
                _max_step(z_l[has_l], dz_l[has_l]),
                _max_step(z_u[has_u], dz_u[has_u]),
            )

        # Predictor
        r_cl = np.where(has_l, -s_l * z_l, 0.0)
        r_cu = np.where(has_u, -s_u * z_u, 0.0)
        dx_a, _, dzl_a, dzu_a = solve(r_cl, r_cu)
        if n_bounds:
            alpha_a = step_length(dx_a, dzl_a, dzu_a)
            mu_aff = float(
                ((s_l + alpha_a * dx_a) * (z_l + alpha_a * dzl_a))[has_l].sum()
                + ((s_u - alpha_a * dx_a) * (z_u + alpha_a * dzu_a))[has_u].sum()
            ) / n_bounds
            sigma = min(1.0, (mu_aff / mu) ** 3) if mu > 0 else 0.0
            # Corrector
            r_cl = np.where(has_l, sigma * mu - s_l * z_l - dx_a * dzl_a, 0.0)
            r_cu = np.where(has_u, sigma * mu - s_u * z_u + dx_a * dzu_a, 0.0)
            dx, dy, dz_l, dz_u = solve(r_cl, r_cu)
            alpha = min(1.0, STEP_TO_BOUNDARY * step_length(dx, dz_l, dz_u))
        else:
            dx, dy, dz_l, dz_u = solve(r_cl, r_cu)
            alpha = 1.0

        step = (x + alpha * dx, y + alpha * dy, z_l + alpha * dz_l, z_u + alpha * dz_u)
        if not all(np.all(np.isfinite(v)) for v in step):
            logger.warning("Interior point step left the finite range", iteration=iteration, mu=mu)
            break
        x, y, z_l, z_u = step

    xu, yu, zu_ = unscale(x, y, z_l, z_u)
    return xu, yu, zu_, status, iteration


def solve_qp(
    qp: QuadraticProgram,
    tol_prim: float = 1e-6,
    tol_dual: float = 1e-6,
    max_iter: int = 100,
    x0: Optional[np.ndarray] = None,
    y0: Optional[np.ndarray] = None,
) -> QpSolution:
    """
    Solve a QP. Never raises on infeasibility; the status reports it.

    x0 and y0 warm-start the primal point and the equality multipliers.
    """
    n, m = qp.n, qp.m
    reduced = _reduce(qp)
    sub = reduced.qp

    x = np.empty(n)
    y = np.zeros(m)
    z = np.zeros(n)
    x[reduced.fixed] = reduced.x_fixed

    infeasible = reduced.infeasible_rows.size > 0 or _row_bound_infeasible(sub, tol_prim)
    iterations = 0
    if infeasible:
        status = QpStatus.infeasible
        x[reduced.free] = _interior_start(np.zeros(sub.n), sub.lb, sub.ub) if sub.n else x[reduced.free]
    elif sub.n == 0:
        status = QpStatus.optimal
    else:
        x0_sub = None if x0 is None else _vector(x0, n, "x0")[reduced.free]
        y0_sub = None if y0 is None else _vector(y0, m, "y0")[reduced.rows]
        x_sub, y_sub, z_sub, status, iterations = _interior_point(
            sub, tol_prim, tol_dual, max_iter, x0_sub, y0_sub
        )
        x[reduced.free] = np.clip(x_sub, sub.lb, sub.ub)
        y[reduced.rows] = y_sub
        z[reduced.free] = z_sub

    if reduced.fixed.size:
        # Multipliers of fixed variables from stationarity
        stationarity = qp.H @ x + qp.g + qp.A_eq.T @ y
        z[reduced.fixed] = -stationarity[reduced.fixed]

    res = _residuals(qp, x, y, z)
    if status == QpStatus.optimal and (res["r_prim"] > tol_prim or res["r_dual"] > tol_dual):
        # Reassembly can only lose accuracy on badly scaled fixed blocks
        status = QpStatus.max_iter
    solution = QpSolution(
        x=x,
        y=y,
        z=z,
        status=status,
        r_prim=res["r_prim"],
        r_dual=res["r_dual"],
        r_comp=res["r_comp"],
        iterations=iterations,
        objective=qp.objective(x),
    )
    logger.debug(
        "QP solved",
        n=n,
        m=m,
        status=status.value,
        iterations=iterations,
        r_prim=solution.r_prim,
        r_dual=solution.r_dual,
    )
    return solution


@dataclass
class KktReport:
    """Per-condition KKT check recomputed from the problem data."""
    primal_equality: float
    primal_bounds: float
    stationarity: float
    complementarity: float
    dual_sign: float
    tol: float

    @property
    def checks(self) -> Dict[str, bool]:
        return {
            "primal_equality": self.primal_equality <= self.tol,
            "primal_bounds": self.primal_bounds <= self.tol,
            "stationarity": self.stationarity <= self.tol,
            "complementarity": self.complementarity <= self.tol,
            "dual_sign": self.dual_sign <= self.tol,
        }

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def failures(self):
        return [name for name, ok in self.checks.items() if not ok]


def check_kkt(qp: QuadraticProgram, sol: QpSolution, tol: float = 1e-6) -> KktReport:
    """Recompute every optimality condition from scratch."""
    x = np.asarray(sol.x, dtype=float)
    y = np.asarray(sol.y, dtype=float)
    z = np.asarray(sol.z, dtype=float)
    if x.shape != (qp.n,) or z.shape != (qp.n,) or y.shape != (qp.m,):
        raise DimensionError(
            f"Solution shapes x{x.shape} y{y.shape} z{z.shape} do not match n={qp.n}, m={qp.m}"
        )
    H = qp.H.toarray() if qp.n <= 200 else qp.H
    A = qp.A_eq.toarray() if qp.n <= 200 else qp.A_eq

    Ax = A @ x
    denom_eq = 1.0 + max(np.abs(Ax).max(initial=0.0), np.abs(qp.b_eq).max(initial=0.0))
    primal_equality = np.abs(Ax - qp.b_eq).max(initial=0.0) / denom_eq

    below = np.clip(qp.lb - x, 0.0, None)
    above = np.clip(x - qp.ub, 0.0, None)
    primal_bounds = max(below.max(initial=0.0), above.max(initial=0.0)) / (1.0 + np.abs(x).max(initial=0.0))

    Hx = H @ x
    ATy = A.T @ y
    grad = Hx + qp.g + ATy + z
    denom_dual = 1.0 + max(
        np.abs(Hx).max(initial=0.0),
        np.abs(qp.g).max(initial=0.0),
        np.abs(ATy).max(initial=0.0),
        np.abs(z).max(initial=0.0),
    )
    stationarity = np.abs(grad).max(initial=0.0) / denom_dual

    scale = 1.0 + max(np.abs(x).max(initial=0.0), np.abs(z).max(initial=0.0))
    worst_comp = 0.0
    worst_sign = 0.0
    for i in range(qp.n):
        if z[i] < 0:
            if np.isfinite(qp.lb[i]):
                worst_comp = max(worst_comp, -z[i] * (x[i] - qp.lb[i]))
            else:
                worst_sign = max(worst_sign, -z[i])
        elif z[i] > 0:
            if np.isfinite(qp.ub[i]):
                worst_comp = max(worst_comp, z[i] * (qp.ub[i] - x[i]))
            else:
                worst_sign = max(worst_sign, z[i])
    return KktReport(
        primal_equality=float(primal_equality),
        primal_bounds=float(primal_bounds),
        stationarity=float(stationarity),
        complementarity=float(worst_comp / scale),
        dual_sign=float(worst_sign / denom_dual),
        tol=tol,
    )


def _format_float(value: float) -> str:
    return repr(float(value))


def dump_qp(qp: QuadraticProgram, path) -> Path:
    """
    Write a QP as versioned text.

    Layout: header line, "n m", then sections "H <nnz>" and "A <nnz>" of
    "row col value" triplets, then sections g, b, lb, ub with one value per
    line. Infinite bounds are written as inf / -inf.
    """
    path = Path(path)
    with atomic_writer(path) as handle:
        handle.write(f"{DUMP_HEADER} v{DUMP_FORMAT_VERSION}\n")
        handle.write(f"{qp.n} {qp.m}\n")
        for name, matrix in (("H", qp.H), ("A", qp.A_eq)):
            coo = matrix.tocoo()
            handle.write(f"{name} {coo.nnz}\n")
            for i, j, v in zip(coo.row, coo.col, coo.data):
                handle.write(f"{i} {j} {_format_float(v)}\n")
        for name, vector in (("g", qp.g), ("b", qp.b_eq), ("lb", qp.lb), ("ub", qp.ub)):
            handle.write(f"{name} {vector.size}\n")
            for v in vector:
                handle.write(f"{_format_float(v)}\n")
    return path


def load_qp(path) -> QuadraticProgram:
    """Read a QP written by dump_qp."""
    path = Path(path)
    if not path.exists():
        raise RunLogError(f"QP dump not found: {path}")
    lines = iter(path.read_text(encoding="utf-8").splitlines())
    try:
        header = next(lines).split()
        if header[:2] != DUMP_HEADER.split() or header[2] != f"v{DUMP_FORMAT_VERSION}":
            raise RunLogError(f"Unsupported QP dump header in {path}")
        n, m = (int(v) for v in next(lines).split())
        matrices = {}
        for name, shape in (("H", (n, n)), ("A", (m, n))):
            tag, count = next(lines).split()
            if tag != name:
                raise RunLogError(f"Expected section {name}, found {tag}")
            rows, cols, data = [], [], []
            for _ in range(int(count)):
                i, j, v = next(lines).split()
                rows.append(int(i))
                cols.append(int(j))
                data.append(float(v))
            matrices[name] = sparse.csc_matrix((data, (rows, cols)), shape=shape)
        vectors = {}
        for name in ("g", "b", "lb", "ub"):
            tag, count = next(lines).split()
            if tag != name:
                raise RunLogError(f"Expected section {name}, found {tag}")
            vectors[name] = np.array([float(next(lines)) for _ in range(int(count))])
    except (StopIteration, ValueError) as e:
        raise RunLogError(f"Corrupt QP dump {path}: {e}") from e
    return QuadraticProgram(
        H=matrices["H"],
        g=vectors["g"],
        A_eq=matrices["A"],
        b_eq=vectors["b"],
        lb=vectors["lb"],
        ub=vectors["ub"],
    )
