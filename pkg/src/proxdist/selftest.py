"""Fast invariant checks behind the `selftest` subcommand.

Each check returns quietly or raises AssertionError; `run_all` prints one
line per suite and reports overall success. These mirror the heavier
pytest invariants at a size that finishes in seconds.
"""

import numpy as np

from . import engine, problems
from .linsolve import condnum_inverse_apply, metric_inverse_apply
from .operators import (
    ClusteringOperator,
    CondnumOperator,
    DenseOperator,
    TriangleOperator,
    TvOperator,
)
from .projections import (
    L1Ball,
    NonnegativeOrthant,
    SparsitySet,
    project_l1_ball,
)


def _sample_operators(rng):
    return [
        TriangleOperator(5),
        ClusteringOperator(2, 5, _rand_weights(rng, 5)),
        TvOperator(4, 5),
        CondnumOperator(4, 2.0),
        DenseOperator(rng.standard_normal((7, 4))),
    ]


def _rand_weights(rng, m):
    W = rng.random((m, m))
    W = (W + W.T) / 2
    np.fill_diagonal(W, 0.0)
    return W


def check_adjoint():
    rng = np.random.default_rng(0)
    for op in _sample_operators(rng):
        for _ in range(20):
            x = rng.standard_normal(op.cols)
            y = rng.standard_normal(op.rows)
            lhs = float(op.apply(x) @ y)
            rhs = float(x @ op.apply_transpose(y))
            scale = max(1.0, abs(lhs), abs(rhs))
            assert abs(lhs - rhs) <= 1e-10 * scale
            g = op.apply_gram(x)
            ref = op.apply_transpose(op.apply(x))
            assert np.allclose(g, ref, rtol=1e-12, atol=1e-12 * max(
                1.0, np.abs(ref).max()))


def check_projections():
    rng = np.random.default_rng(1)
    sets = [NonnegativeOrthant(12), L1Ball(12, 1.5), SparsitySet(12, 4)]
    for s in sets:
        for _ in range(50):
            v = rng.standard_normal(12)
            p1 = s.project(v)
            assert np.allclose(s.project(p1), p1, atol=1e-12)
    for _ in range(50):
        v = rng.standard_normal(30) * 3
        ref = _l1_sort_oracle(v, 2.0)
        assert np.allclose(project_l1_ball(v, 2.0), ref, atol=1e-12)


def _l1_sort_oracle(v, radius):
    mag = np.abs(v)
    if mag.sum() <= radius:
        return v.copy()
    u = np.sort(mag)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, len(u) + 1)
    valid = u - (css - radius) / ks > 0
    k = ks[valid][-1]
    lam = (css[k - 1] - radius) / k
    return np.sign(v) * np.maximum(mag - lam, 0.0)


def check_exact_inverses():
    rng = np.random.default_rng(2)
    for m in (3, 5):
        tri = TriangleOperator(m)
        T = tri.materialize_dense()
        p = tri.cols
        for rho in (0.5, 3.0):
            A = np.eye(p) + rho * (T.T @ T + np.eye(p))
            b = rng.standard_normal(p)
            assert np.allclose(metric_inverse_apply(m, rho, b),
                               np.linalg.solve(A, b), atol=1e-9)
    for p in (2, 5):
        op = CondnumOperator(p, 2.0)
        D = op.materialize_dense()
        for rho in (0.5, 3.0):
            A = np.eye(p) + rho * (D.T @ D)
            b = rng.standard_normal(p)
            assert np.allclose(condnum_inverse_apply(p, 2.0, rho, b),
                               np.linalg.solve(A, b), atol=1e-9)


def check_descent():
    rng = np.random.default_rng(3)
    Y = problems.untrivec(rng.uniform(0, 10, size=6))
    problem = problems.build_metric(np.abs(Y))
    config = engine.StoppingConfig(delta_h=1e-6, i_inner=200)
    for solver in ("mm", "sd"):
        x0 = problem.x0.copy()
        state = engine.SolverState(x=x0, z=x0.copy())
        _, trace, _, _ = engine.run_inner(
            problem, 5.0, config, state, solver=solver, use_acceleration=False
        )
        h = trace.column("loss") + 0.5 * 5.0 * trace.column("distance") ** 2
        assert np.all(np.diff(h) <= 1e-10 * (1.0 + np.abs(h[:-1])))


def check_trivec():
    rng = np.random.default_rng(4)
    X = _rand_weights(rng, 6)
    assert np.allclose(problems.untrivec(problems.trivec(X)), X)


ALL_CHECKS = (
    ("adjoint and gram consistency", check_adjoint),
    ("projection idempotence and l1 pivot", check_projections),
    ("closed-form inverses", check_exact_inverses),
    ("inner-solver descent", check_descent),
    ("trivec round trip", check_trivec),
)


def run_all(out=print):
    ok = True
    for name, fn in ALL_CHECKS:
        try:
            fn()
            out(f"selftest: {name}: pass")
        except AssertionError as exc:
            ok = False
            out(f"selftest: {name}: FAIL {exc}")
    return ok
