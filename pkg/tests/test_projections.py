"""Constraint-set projections: fixtures, oracles, and convexity properties."""

import itertools

import numpy as np
import pytest

from proxdist import ContractViolationError
from proxdist.projections import (
    BlockProduct,
    ColumnSparsitySet,
    FreeSet,
    L1Ball,
    NonnegativeOrthant,
    NonpositiveOrthant,
    SparsitySet,
    project_column_sparsity,
    project_l1_ball,
    prox_scaled_distance,
)
from conftest import l1_sort_oracle


def test_project_fixtures():
    nn = NonnegativeOrthant(2)
    np.testing.assert_allclose(nn.project([-1.0, 2.0]), [0.0, 2.0])
    ball = L1Ball(2, 2.0)
    np.testing.assert_allclose(ball.project([3.0, -1.0]), [2.0, 0.0])
    sp = SparsitySet(3, 2)
    np.testing.assert_allclose(sp.project([3.0, 1.0, -2.0]), [3.0, 0.0, -2.0])


def test_l1_ball_fixtures():
    np.testing.assert_allclose(
        project_l1_ball(np.array([0.5, -0.5]), 2.0), [0.5, -0.5]
    )
    np.testing.assert_allclose(
        project_l1_ball(np.array([1.0, 1.0, 1.0]), 1.5), [0.5, 0.5, 0.5]
    )
    np.testing.assert_allclose(project_l1_ball(np.array([3.0, -1.0]), 2.0), [2.0, 0.0])
    with pytest.raises(ContractViolationError):
        project_l1_ball(np.ones(3), -0.1)


def test_l1_ball_degenerate_and_boundary():
    np.testing.assert_array_equal(project_l1_ball(np.ones(4), 0.0), np.zeros(4))
    v = np.array([1.0, -1.0])
    np.testing.assert_array_equal(project_l1_ball(v, 2.0), v)  # on the sphere


@pytest.mark.parametrize("n", [1, 2, 10, 1000])
def test_l1_pivot_matches_sort_oracle(n, rng):
    for _ in range(40):
        v = rng.standard_normal(n) * rng.uniform(0.1, 5)
        radius = rng.uniform(0.0, 1.2) * np.abs(v).sum()
        np.testing.assert_allclose(
            project_l1_ball(v, radius), l1_sort_oracle(v, radius), atol=1e-12
        )


def test_column_sparsity_fixtures(rng):
    V = rng.standard_normal((3, 6))
    np.testing.assert_array_equal(project_column_sparsity(V, 6), V)
    np.testing.assert_array_equal(project_column_sparsity(V, 0), np.zeros_like(V))
    v = np.array([[3.0, 1.0, -2.0]])
    np.testing.assert_allclose(project_column_sparsity(v, 2), [[3.0, 0.0, -2.0]])


def test_sparsity_tie_break_lowest_index():
    got = SparsitySet(4, 2).project([1.0, -2.0, 2.0, 2.0])
    # magnitudes (1,2,2,2): the two slots go to indices 1 and 2
    np.testing.assert_array_equal(got, [0.0, -2.0, 2.0, 0.0])
    cols = ColumnSparsitySet(2, 3, 1)
    flat = np.array([1.0, 0.0, 0.0, 1.0, 1.0, 0.0])  # three unit-norm blocks
    np.testing.assert_array_equal(
        cols.project(flat), [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
    )


def test_sparsity_brute_force_optimality(rng):
    for p in range(1, 13):
        for _ in range(3):
            v = rng.standard_normal(p) * 2
            for k in range(p + 1):
                got = SparsitySet(p, k).project(v)
                best = np.inf
                for support in itertools.combinations(range(p), k):
                    cand = np.zeros(p)
                    cand[list(support)] = v[list(support)]
                    best = min(best, float(np.linalg.norm(v - cand)))
                assert np.linalg.norm(v - got) <= best + 1e-12


def test_column_sparsity_brute_force(rng):
    d, P = 3, 6
    for _ in range(10):
        V = rng.standard_normal((d, P))
        for k in range(P + 1):
            got = project_column_sparsity(V, k)
            best = np.inf
            for support in itertools.combinations(range(P), k):
                cand = np.zeros_like(V)
                cand[:, list(support)] = V[:, list(support)]
                best = min(best, float(np.linalg.norm(V - cand)))
            assert np.linalg.norm(V - got) <= best + 1e-12


def all_sets():
    return [
        NonnegativeOrthant(12),
        NonpositiveOrthant(12),
        L1Ball(12, 1.7),
        SparsitySet(12, 4),
        ColumnSparsitySet(3, 4, 2),
        FreeSet(12),
        BlockProduct([NonnegativeOrthant(5), L1Ball(4, 1.0), SparsitySet(3, 1)]),
    ]


def test_idempotence_1000_vectors(rng):
    for s in all_sets():
        exact = s.kind in ("nonneg-orthant", "nonpos-orthant", "sparsity",
                           "column-sparsity", "free")
        for _ in range(1000 // 7 + 1):
            v = rng.standard_normal(s.dim) * 3
            p1 = s.project(v)
            p2 = s.project(p1)
            if exact:
                np.testing.assert_array_equal(p1, p2)
            else:
                np.testing.assert_allclose(p1, p2, atol=1e-12)


def test_nonexpansive_convex_sets(rng):
    for s in (NonnegativeOrthant(10), NonpositiveOrthant(10), L1Ball(10, 2.0)):
        for _ in range(200):
            u = rng.standard_normal(10) * 2
            v = rng.standard_normal(10) * 2
            d_out = np.linalg.norm(s.project(u) - s.project(v))
            assert d_out <= np.linalg.norm(u - v) + 1e-12


def test_prox_scaled_distance_fixtures():
    nn = NonnegativeOrthant(2)
    z = np.array([1.0, 2.0])
    np.testing.assert_array_equal(prox_scaled_distance(z, 3.0, nn), z)
    z = np.array([-2.0, 4.0])
    np.testing.assert_allclose(prox_scaled_distance(z, 1.0, nn), [-1.0, 4.0])
    np.testing.assert_allclose(
        prox_scaled_distance(z, 1e3, nn), [0.0, 4.0], atol=2e-3
    )


def test_prox_scaled_distance_scalar_oracle(rng):
    # minimize 0.5(y-z)^2 + a*0.5*dist(y, R+)^2 coordinate-wise by search
    nn = NonnegativeOrthant(1)
    for _ in range(20):
        z = rng.standard_normal(1) * 3
        a = rng.uniform(0.1, 5.0)
        got = prox_scaled_distance(z, a, nn)
        grid = np.linspace(-6, 6, 200001)
        val = 0.5 * (grid - z[0]) ** 2 + 0.5 * a * np.minimum(grid, 0.0) ** 2
        assert abs(got[0] - grid[np.argmin(val)]) < 1e-4


def test_prox_projection_invariant_convex(rng):
    for s in (NonnegativeOrthant(8), L1Ball(8, 1.5)):
        for _ in range(100):
            z = rng.standard_normal(8) * 2
            a = rng.uniform(0.01, 100)
            y = prox_scaled_distance(z, a, s)
            np.testing.assert_allclose(s.project(y), s.project(z), atol=1e-10)


def test_block_product_equals_concatenation(rng):
    parts = [NonnegativeOrthant(4), L1Ball(5, 1.0), SparsitySet(3, 1)]
    prod = BlockProduct(parts)
    for _ in range(50):
        v = rng.standard_normal(12)
        expect = np.concatenate(
            [parts[0].project(v[:4]), parts[1].project(v[4:9]),
             parts[2].project(v[9:])]
        )
        np.testing.assert_allclose(prod.project(v), expect, atol=1e-14)


def test_selection_margin():
    s = SparsitySet(4, 2)
    assert s.selection_margin(np.array([4.0, 3.0, 1.0, 0.5])) == pytest.approx(2.0)
    assert np.isinf(NonnegativeOrthant(3).selection_margin(np.ones(3)))
    assert np.isinf(SparsitySet(3, 3).selection_margin(np.ones(3)))


def test_k_out_of_range():
    with pytest.raises(ContractViolationError):
        SparsitySet(3, 4)
    with pytest.raises(ContractViolationError):
        ColumnSparsitySet(2, 3, -1)
    with pytest.raises(ContractViolationError):
        project_column_sparsity(np.ones((2, 3)), 4)
