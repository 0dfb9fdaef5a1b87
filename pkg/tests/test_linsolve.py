"""Iterative solvers and the exact closed-form inverses."""

import numpy as np
import pytest

from proxdist import SolverFailureError, build_metric
from proxdist.linsolve import (
    SpdSystem,
    cg_solve,
    condnum_inverse_apply,
    lsqr_solve,
    metric_inverse_apply,
)
from proxdist.operators import CondnumOperator, TriangleOperator
from conftest import random_symmetric


def dense_system(A, b):
    return SpdSystem(matvec=lambda v: A @ v, rhs=b, dim=A.shape[0])


def test_cg_identity_one_iteration(rng):
    b = rng.standard_normal(8)
    out = cg_solve(dense_system(np.eye(8), b), 1e-10, 50)
    assert out.converged and out.iterations <= 1
    np.testing.assert_allclose(out.x, b, atol=1e-10)


def test_cg_diagonal():
    A = np.diag([1.0, 2.0, 4.0])
    out = cg_solve(dense_system(A, np.array([1.0, 2.0, 4.0])), 1e-12, 50)
    np.testing.assert_allclose(out.x, np.ones(3), atol=1e-10)


def test_cg_zero_rhs():
    out = cg_solve(dense_system(np.eye(4), np.zeros(4)), 1e-10, 10)
    assert out.converged and out.iterations == 0
    np.testing.assert_array_equal(out.x, np.zeros(4))


def test_cg_metric_system_matches_dense(rng):
    m, rho = 5, 2.5
    problem = build_metric(random_symmetric(rng, m))
    G = problem.operator.materialize_dense()
    A = np.eye(problem.operator.cols) + rho * (G.T @ G)
    b = rng.standard_normal(problem.operator.cols)
    sys = SpdSystem(
        matvec=lambda v: v + rho * problem.operator.apply_gram(v),
        rhs=b,
        dim=problem.operator.cols,
    )
    out = cg_solve(sys, 1e-12, 200)
    np.testing.assert_allclose(out.x, np.linalg.solve(A, b), atol=1e-8)


def test_cg_converges_within_dimension_iterations(rng):
    for n in (5, 20, 50):
        Q = rng.standard_normal((n, n))
        A = Q.T @ Q + n * np.eye(n)
        b = rng.standard_normal(n)
        out = cg_solve(dense_system(A, b), 1e-8, 3 * n)
        assert out.converged and out.iterations <= 3 * n
        np.testing.assert_allclose(out.x, np.linalg.solve(A, b), atol=1e-8)


def test_cg_solve_then_multiply(rng):
    n, tol = 30, 1e-9
    Q = rng.standard_normal((n, n))
    A = Q.T @ Q + n * np.eye(n)
    b = rng.standard_normal(n)
    out = cg_solve(dense_system(A, b), tol, 5 * n)
    assert np.linalg.norm(A @ out.x - b) <= 10 * tol * np.linalg.norm(b)


def test_cg_divergence_error(rng):
    A = -np.eye(4)  # not positive definite
    with pytest.raises(SolverFailureError):
        cg_solve(dense_system(A, np.ones(4)), 1e-10, 50)


def test_cg_warm_start_at_solution(rng):
    A = np.diag(rng.uniform(1, 3, size=6))
    b = rng.standard_normal(6)
    x_star = np.linalg.solve(A, b)
    out = cg_solve(dense_system(A, b), 1e-10, 50, x0=x_star)
    assert out.iterations == 0 and out.converged


def _lsqr_dense(A, b, tol=1e-12, maxiter=500, x0=None):
    return lsqr_solve(lambda v: A @ v, lambda u: A.T @ u, A.shape, b, tol,
                      maxiter, x0=x0)


def test_lsqr_agrees_with_cg(rng):
    for A, b in (
        (np.eye(8), rng.standard_normal(8)),
        (np.diag([1.0, 2.0, 4.0]), np.array([1.0, 2.0, 4.0])),
    ):
        cg = cg_solve(dense_system(A, b), 1e-12, 100)
        ls = _lsqr_dense(A, b)
        np.testing.assert_allclose(ls.x, cg.x, atol=1e-6)


def test_lsqr_zero_rhs_and_square(rng):
    A = rng.standard_normal((6, 6)) + 6 * np.eye(6)
    out = _lsqr_dense(A, np.zeros(6))
    np.testing.assert_allclose(out.x, np.zeros(6), atol=1e-10)
    b = rng.standard_normal(6)
    out = _lsqr_dense(A, b)
    np.testing.assert_allclose(out.x, np.linalg.solve(A, b), atol=1e-6)


def test_lsqr_overdetermined_least_squares(rng):
    A = rng.standard_normal((12, 5))
    b = rng.standard_normal(12)
    out = _lsqr_dense(A, b)
    ref, *_ = np.linalg.lstsq(A, b, rcond=None)
    np.testing.assert_allclose(out.x, ref, atol=1e-8)


def metric_dense_matrix(m, rho):
    T = TriangleOperator(m).materialize_dense()
    p = T.shape[1]
    return np.eye(p) + rho * (T.T @ T + np.eye(p))


def test_metric_inverse_small_rho(rng):
    b = rng.standard_normal(10)
    np.testing.assert_allclose(metric_inverse_apply(5, 1e-12, b), b, atol=1e-8)


def test_metric_inverse_matches_dense(rng):
    b = rng.standard_normal(10)
    A = metric_dense_matrix(5, 1.0)
    np.testing.assert_allclose(
        metric_inverse_apply(5, 1.0, b), np.linalg.solve(A, b), atol=1e-10
    )


def test_metric_inverse_ones_eigenvector(rng):
    b = np.ones(6)
    out = metric_inverse_apply(4, 2.0, b)
    ref = np.linalg.solve(metric_dense_matrix(4, 2.0), b)
    np.testing.assert_allclose(out, ref, atol=1e-12)
    assert np.allclose(out, out[0])  # stays a multiple of the ones vector


def test_condnum_inverse_fixtures(rng):
    b = rng.standard_normal(4)
    np.testing.assert_allclose(condnum_inverse_apply(4, 2.0, 1e-12, b), b, atol=1e-8)
    np.testing.assert_array_equal(
        condnum_inverse_apply(3, 2.0, 1.0, np.zeros(3)), np.zeros(3)
    )
    D = CondnumOperator(3, 2.0).materialize_dense()
    A = np.eye(3) + 1.0 * (D.T @ D)
    b = rng.standard_normal(3)
    np.testing.assert_allclose(
        condnum_inverse_apply(3, 2.0, 1.0, b), np.linalg.solve(A, b), atol=1e-10
    )


@pytest.mark.parametrize("rho", [0.1, 1.0, 10.0, 1e3])
def test_woodbury_grid(rho, rng):
    for m in range(3, 9):
        A = metric_dense_matrix(m, rho)
        b = rng.standard_normal(A.shape[0])
        ref = np.linalg.solve(A, b)
        got = metric_inverse_apply(m, rho, b)
        assert np.linalg.norm(got - ref) <= 1e-9 * np.linalg.norm(ref)


@pytest.mark.parametrize("rho", [0.1, 1.0, 10.0, 1e3])
def test_sherman_morrison_grid(rho, rng):
    for p in range(1, 9):
        for c in (1.0, 2.0, 50.0):
            D = CondnumOperator(p, c).materialize_dense()
            A = np.eye(p) + rho * (D.T @ D)
            b = rng.standard_normal(p)
            ref = np.linalg.solve(A, b)
            got = condnum_inverse_apply(p, c, rho, b)
            assert np.linalg.norm(got - ref) <= 1e-9 * np.linalg.norm(ref)
