import itertools

import numpy as np
import pytest
from scipy import sparse

from gridbench.app.core.errors import DimensionError, NonFiniteValueError, RunLogError
from gridbench.app.services.qp_solver import (
    QpSolution,
    QpStatus,
    QuadraticProgram,
    _farkas_certificate,
    check_kkt,
    dump_qp,
    load_qp,
    solve_qp,
)


def _brute_force(H, g, A, b, lb, ub):
    """Minimum over every face of the box of the equality-constrained face minimizer."""
    n = H.shape[0]
    m = 0 if A is None else A.shape[0]
    best_x, best_f = None, np.inf
    for pattern in itertools.product((-1, 0, 1), repeat=n):
        free = [i for i, p in enumerate(pattern) if p == 0]
        x = np.array([lb[i] if p < 0 else ub[i] if p > 0 else 0.0 for i, p in enumerate(pattern)])
        fixed = [i for i in range(n) if i not in free]
        if free:
            rhs_x = -g[free] - H[np.ix_(free, fixed)] @ x[fixed]
            if m:
                rhs_y = b - A[:, fixed] @ x[fixed]
                K = np.block([[H[np.ix_(free, free)], A[:, free].T], [A[:, free], np.zeros((m, m))]])
                rhs = np.concatenate([rhs_x, rhs_y])
            else:
                K, rhs = H[np.ix_(free, free)], rhs_x
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                continue
            x[free] = sol[: len(free)]
        if np.any(x < lb - 1e-9) or np.any(x > ub + 1e-9):
            continue
        if m and np.abs(A @ x - b).max() > 1e-9:
            continue
        f = 0.5 * x @ H @ x + g @ x
        if f < best_f:
            best_x, best_f = x, f
    return best_x, best_f


class TestSmallProblems:
    def test_unconstrained_minimum(self):
        qp = QuadraticProgram.create(np.diag([2.0, 4.0]), g=[-2.0, -4.0])
        sol = solve_qp(qp)
        assert sol.status == QpStatus.optimal
        np.testing.assert_allclose(sol.x, [1.0, 1.0], atol=1e-6)

    def test_active_upper_bound_has_positive_multiplier(self):
        qp = QuadraticProgram.create([[2.0]], g=[-4.0], lb=[-10.0], ub=[1.0])
        sol = solve_qp(qp, tol_prim=1e-10, tol_dual=1e-10)
        assert sol.is_optimal
        assert sol.x[0] == pytest.approx(1.0, abs=1e-8)
        assert sol.z[0] == pytest.approx(2.0, abs=1e-6)

    def test_active_lower_bound_has_negative_multiplier(self):
        qp = QuadraticProgram.create([[2.0]], g=[4.0], lb=[-1.0], ub=[10.0])
        sol = solve_qp(qp, tol_prim=1e-10, tol_dual=1e-10)
        assert sol.x[0] == pytest.approx(-1.0, abs=1e-8)
        assert sol.z[0] == pytest.approx(-2.0, abs=1e-6)

    def test_equality_constrained(self):
        qp = QuadraticProgram.create(np.eye(2) * 2.0, A_eq=[[1.0, 1.0]], b_eq=[1.0])
        sol = solve_qp(qp, tol_prim=1e-10, tol_dual=1e-10)
        np.testing.assert_allclose(sol.x, [0.5, 0.5], atol=1e-8)
        assert sol.y[0] == pytest.approx(-1.0, abs=1e-6)
        assert sol.objective == pytest.approx(0.5, abs=1e-8)

    def test_equality_outside_box_is_infeasible(self):
        qp = QuadraticProgram.create(np.eye(2), A_eq=[[1.0, 1.0]], b_eq=[5.0], lb=[0.0, 0.0], ub=[1.0, 1.0])
        sol = solve_qp(qp)
        assert sol.status == QpStatus.infeasible
        assert not sol.is_optimal

    def test_fixed_variables_are_eliminated(self):
        qp = QuadraticProgram.create(
            np.eye(2), A_eq=[[1.0, 1.0]], b_eq=[1.0], lb=[0.3, -5.0], ub=[0.3, 5.0]
        )
        sol = solve_qp(qp, tol_prim=1e-10, tol_dual=1e-10)
        assert sol.is_optimal
        assert sol.x[0] == 0.3
        assert sol.x[1] == pytest.approx(0.7, abs=1e-8)
        assert check_kkt(qp, sol, tol=1e-6).passed

    def test_fully_fixed_problem(self):
        qp = QuadraticProgram.create(np.eye(2), lb=[1.0, 2.0], ub=[1.0, 2.0])
        sol = solve_qp(qp)
        assert sol.is_optimal
        assert sol.iterations == 0
        np.testing.assert_array_equal(sol.x, [1.0, 2.0])

    def test_fixed_variables_violating_an_equality(self):
        qp = QuadraticProgram.create(np.eye(2), A_eq=[[1.0, 1.0]], b_eq=[1.0], lb=[0.0, 0.0], ub=[0.0, 0.0])
        assert solve_qp(qp).status == QpStatus.infeasible


def test_matches_brute_force_on_random_box_problems(rng):
    for trial in range(200):
        n = int(rng.integers(1, 7))
        M = rng.normal(size=(n, n))
        H = M @ M.T + 0.1 * np.eye(n)
        g = 3.0 * rng.normal(size=n)
        lb = -rng.uniform(0.1, 2.0, size=n)
        ub = rng.uniform(0.1, 2.0, size=n)
        expected, f_expected = _brute_force(H, g, None, None, lb, ub)
        qp = QuadraticProgram.create(H, g=g, lb=lb, ub=ub)
        sol = solve_qp(qp, tol_prim=1e-9, tol_dual=1e-9, max_iter=200)
        assert sol.is_optimal, f"trial {trial}, n={n}"
        np.testing.assert_allclose(sol.x, expected, atol=1e-5)
        assert sol.objective == pytest.approx(f_expected, abs=1e-6)
        assert check_kkt(qp, sol, tol=1e-6).passed


def test_matches_brute_force_with_an_equality_row(rng):
    compared = 0
    for _ in range(20):
        M = rng.normal(size=(3, 3))
        H = M @ M.T + 0.5 * np.eye(3)
        g = rng.normal(size=3)
        A = rng.normal(size=(1, 3))
        lb = -np.ones(3)
        ub = np.ones(3)
        b = A @ rng.uniform(-0.9, 0.9, size=3)
        expected, f_expected = _brute_force(H, g, A, b, lb, ub)
        qp = QuadraticProgram.create(H, g=g, A_eq=A, b_eq=b, lb=lb, ub=ub)
        sol = solve_qp(qp, tol_prim=1e-9, tol_dual=1e-9, max_iter=200)
        assert sol.is_optimal
        np.testing.assert_allclose(sol.x, expected, atol=1e-5)
        assert sol.objective == pytest.approx(f_expected, abs=1e-6)
        assert check_kkt(qp, sol, tol=1e-6).passed
        compared += 1
    assert compared == 20


def test_sparse_banded_problem(rng):
    n = 200
    H = sparse.diags([np.full(n, 4.0), np.full(n - 1, -1.0), np.full(n - 1, -1.0)], [0, -1, 1], format="csc")
    A = sparse.csc_matrix(np.ones((1, n)))
    qp = QuadraticProgram(H=H, g=rng.normal(size=n), A_eq=A, b_eq=np.array([3.0]), lb=np.full(n, -0.2), ub=np.full(n, 0.2))
    sol = solve_qp(qp, tol_prim=1e-8, tol_dual=1e-8)
    assert sol.is_optimal
    assert sol.x.sum() == pytest.approx(3.0, abs=1e-6)
    assert check_kkt(qp, sol, tol=1e-6).passed


def test_solution_is_deterministic(rng):
    M = rng.normal(size=(6, 6))
    qp = QuadraticProgram.create(M @ M.T + np.eye(6), g=rng.normal(size=6), lb=-np.ones(6), ub=np.ones(6))
    first = solve_qp(qp)
    second = solve_qp(qp)
    np.testing.assert_array_equal(first.x, second.x)
    assert first.iterations == second.iterations


def test_warm_start_reaches_same_solution(rng):
    M = rng.normal(size=(5, 5))
    qp = QuadraticProgram.create(
        M @ M.T + np.eye(5), g=rng.normal(size=5), A_eq=np.ones((1, 5)), b_eq=[0.5], lb=-np.ones(5), ub=np.ones(5)
    )
    cold = solve_qp(qp, tol_prim=1e-9, tol_dual=1e-9)
    warm = solve_qp(qp, tol_prim=1e-9, tol_dual=1e-9, x0=cold.x, y0=cold.y)
    assert warm.is_optimal
    np.testing.assert_allclose(warm.x, cold.x, atol=1e-6)


def test_kkt_check_flags_a_perturbed_point():
    qp = QuadraticProgram.create(np.eye(2) * 2.0, A_eq=[[1.0, 1.0]], b_eq=[1.0])
    sol = solve_qp(qp, tol_prim=1e-10, tol_dual=1e-10)
    sol.x = sol.x + np.array([0.1, 0.0])
    report = check_kkt(qp, sol)
    assert not report.passed
    assert "primal_equality" in report.failures()


class TestValidation:
    def test_asymmetric_hessian(self):
        with pytest.raises(DimensionError):
            QuadraticProgram.create([[1.0, 0.5], [0.0, 1.0]])

    def test_crossed_bounds(self):
        with pytest.raises(DimensionError):
            QuadraticProgram.create(np.eye(1), lb=[1.0], ub=[0.0])

    def test_non_finite_linear_term(self):
        with pytest.raises(NonFiniteValueError):
            QuadraticProgram.create(np.eye(1), g=[np.nan])

    def test_wrong_vector_length(self):
        with pytest.raises(DimensionError):
            QuadraticProgram.create(np.eye(2), g=[1.0])


class TestDump:
    def test_dump_preserves_the_problem(self, tmp_path):
        qp = QuadraticProgram.create(
            np.array([[2.0, 0.1], [0.1, 1.0]]),
            g=[0.1, -1.0 / 3.0],
            A_eq=[[1.0, 2.0]],
            b_eq=[0.7],
            lb=[-np.inf, 0.0],
            ub=[1.0, np.inf],
        )
        loaded = load_qp(dump_qp(qp, tmp_path / "qp.txt"))
        assert (loaded.H != qp.H).nnz == 0
        assert (loaded.A_eq != qp.A_eq).nnz == 0
        np.testing.assert_array_equal(loaded.g, qp.g)
        np.testing.assert_array_equal(loaded.b_eq, qp.b_eq)
        np.testing.assert_array_equal(loaded.lb, qp.lb)
        np.testing.assert_array_equal(loaded.ub, qp.ub)
        np.testing.assert_array_equal(solve_qp(loaded).x, solve_qp(qp).x)

    def test_truncated_dump(self, tmp_path):
        path = dump_qp(QuadraticProgram.create(np.eye(3), g=[1.0, 2.0, 3.0]), tmp_path / "qp.txt")
        text = path.read_text().splitlines()
        path.write_text("\n".join(text[:-2]) + "\n")
        with pytest.raises(RunLogError):
            load_qp(path)

    def test_foreign_header(self, tmp_path):
        path = tmp_path / "qp.txt"
        path.write_text("# something-else v1\n1 0\n")
        with pytest.raises(RunLogError):
            load_qp(path)

    def test_missing_dump(self, tmp_path):
        with pytest.raises(RunLogError):
            load_qp(tmp_path / "absent.txt")


def test_single_active_lower_bound():
    qp = QuadraticProgram.create([[2.0]], lb=[1.0])
    sol = solve_qp(qp)
    assert sol.is_optimal
    assert sol.x[0] == pytest.approx(1.0, abs=1e-6)


def test_equality_with_box():
    qp = QuadraticProgram.create(np.eye(2), A_eq=[[1.0, 1.0]], b_eq=[1.0], lb=[0.0, 0.0], ub=[1.0, 1.0])
    sol = solve_qp(qp)
    np.testing.assert_allclose(sol.x, [0.5, 0.5], atol=1e-6)
    assert check_kkt(qp, sol).passed


@pytest.mark.parametrize("scale", [0.01, 1.0, 250.0])
def test_argmin_is_invariant_to_cost_scaling(rng, scale):
    n = 5
    M = rng.normal(size=(n, n))
    H = M @ M.T + np.eye(n)
    g = rng.normal(size=n) * 3.0
    lb, ub = -np.ones(n), np.ones(n)
    reference = solve_qp(QuadraticProgram.create(H, g=g, lb=lb, ub=ub), tol_prim=1e-9, tol_dual=1e-9, max_iter=200)
    scaled = solve_qp(
        QuadraticProgram.create(scale * H, g=scale * g, lb=lb, ub=ub), tol_prim=1e-9, tol_dual=1e-9, max_iter=200
    )
    assert scaled.is_optimal
    np.testing.assert_allclose(scaled.x, reference.x, atol=1e-5)


def test_kkt_check_accepts_zero_problem_at_origin():
    qp = QuadraticProgram.create(np.zeros((2, 2)))
    sol = QpSolution(
        x=np.zeros(2), y=np.zeros(0), z=np.zeros(2), status=QpStatus.optimal, r_prim=0.0, r_dual=0.0, iterations=0
    )
    assert check_kkt(qp, sol).passed


def test_kkt_check_flags_stationarity_after_perturbation():
    qp = QuadraticProgram.create(np.eye(3) * 2.0, g=[-1.0, 0.5, 2.0])
    sol = solve_qp(qp, tol_prim=1e-10, tol_dual=1e-10)
    assert check_kkt(qp, sol).passed
    sol.x = sol.x + 1e-2
    assert "stationarity" in check_kkt(qp, sol).failures()


def test_badly_scaled_storage_chain_converges():
    # e(j+1) = e(j) - 2.5 u(j) / 1.1 with e in [0, 2e4] and u in [0, 14]; the e**2 term drives u to its bound
    N, e0, u_max = 20, 1.0e4, 14.0
    drain = 2.5 / 1.1
    n = 2 * N
    A = np.zeros((N, n))
    b = np.zeros(N)
    for j in range(N):
        A[j, j] = 1.0
        A[j, N + j] = drain
        if j:
            A[j, j - 1] = -1.0
    b[0] = e0
    lb = np.concatenate([np.zeros(N), np.zeros(N)])
    ub = np.concatenate([np.full(N, 2.0e4), np.full(N, u_max)])
    qp = QuadraticProgram.create(2.0 * np.eye(n), A_eq=A, b_eq=b, lb=lb, ub=ub)
    sol = solve_qp(qp)
    assert sol.is_optimal
    np.testing.assert_allclose(sol.x[N:], u_max, rtol=1e-6)
    np.testing.assert_allclose(sol.x[:N], e0 - drain * u_max * np.arange(1, N + 1), rtol=1e-6)


class TestInfeasibilityCertificate:
    # Each row alone is reachable inside [0, 1]^2, together they need x1 = 1.2
    A = [[1.0, 1.0], [1.0, -1.0]]
    b = [1.5, 0.9]

    def test_multiplier_direction_proves_infeasibility(self):
        qp = QuadraticProgram.create(np.eye(2), A_eq=self.A, b_eq=self.b, lb=[0.0, 0.0], ub=[1.0, 1.0])
        assert _farkas_certificate(qp, np.array([1.0, 1.0]), 1e-9)
        assert _farkas_certificate(qp, np.array([-3.0, -3.0]), 1e-9)
        assert not _farkas_certificate(qp, np.array([1.0, 0.0]), 1e-9)

    def test_no_direction_certifies_a_feasible_problem(self, rng):
        qp = QuadraticProgram.create(np.eye(2), A_eq=self.A, b_eq=[1.5, 0.1], lb=[0.0, 0.0], ub=[1.0, 1.0])
        for _ in range(200):
            assert not _farkas_certificate(qp, rng.normal(size=2), 1e-9)

    def test_open_box_direction_is_no_proof(self):
        qp = QuadraticProgram.create(np.eye(2), A_eq=self.A, b_eq=self.b, lb=[0.0, 0.0], ub=[np.inf, 1.0])
        assert not _farkas_certificate(qp, np.array([1.0, 1.0]), 1e-9)

    def test_solver_never_claims_optimality(self):
        qp = QuadraticProgram.create(np.eye(2), A_eq=self.A, b_eq=self.b, lb=[0.0, 0.0], ub=[1.0, 1.0])
        sol = solve_qp(qp)
        assert sol.status in (QpStatus.infeasible, QpStatus.max_iter)
        assert not sol.is_optimal
