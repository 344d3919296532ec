import numpy as np
import pytest

from backend.designs.contrasts import controls_contrasts
from backend.designs.core import Design
from backend.designs.criteria import Criterion
from backend.designs.exceptions import InvalidDesign, LpInfeasible, LpUnbounded, SingularWeights
from backend.designs.lp import (
    RevisedSimplex, assemble_lp, assemble_lp_blocktrend, balance_basis, construct_vertex_design, solve_vertex,
)
from backend.designs.nuisance import build_exponential_trend, build_poly_trend
from backend.designs.resistance import is_balanced, verify_optimality
from backend.designs.weights import controls_weights, optimize_weights

# (v, n, degree) -> largest support a vertex can have
SUPPORT_BOUNDS = [
    (3, 120, 1, 124), (3, 150, 1, 154), (3, 200, 1, 204), (4, 120, 1, 126), (5, 120, 1, 128),
    (8, 120, 1, 134), (3, 120, 2, 126), (3, 120, 3, 128), (3, 120, 4, 130), (3, 120, 5, 132),
]


class TestRevisedSimplex:
    def test_small_program(self):
        # min -x1 - x2 s.t. x1 + 2 x2 + s1 = 4, 3 x1 + x2 + s2 = 6
        a = np.array([[1.0, 2.0, 1.0, 0.0], [3.0, 1.0, 0.0, 1.0]])
        x, basis, pivots, redundant = RevisedSimplex(a, [4.0, 6.0], [-1.0, -1.0, 0.0, 0.0]).solve()
        assert np.allclose(x[:2], [1.6, 1.2])
        assert redundant == 0
        assert len(basis) == 2

    def test_redundant_rows_are_kept(self):
        a = np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0], [0.0, 1.0, 1.0]])
        x, basis, _, redundant = RevisedSimplex(a, [1.0, 2.0, 1.0], [1.0, 2.0, 3.0]).solve()
        assert redundant == 1
        assert np.allclose(a @ x, [1.0, 2.0, 1.0])

    def test_infeasible(self):
        a = np.array([[1.0, 1.0]])
        with pytest.raises(LpInfeasible):
            RevisedSimplex(a, [-1.0], [1.0, 1.0]).solve()

    def test_unbounded(self):
        a = np.array([[1.0, -1.0]])
        with pytest.raises(LpUnbounded):
            RevisedSimplex(a, [1.0], [0.0, -1.0]).solve()

    def test_refactorization_does_not_change_the_vertex(self):
        space = build_poly_trend(30, 2).space(4)
        q = controls_contrasts(4, 1)
        lp = assemble_lp(space, q, controls_weights(4, 1, -1), objective_seed=3)
        x1, *_ = RevisedSimplex(lp.a, lp.b, lp.c, refactor_every=5).solve()
        x2, *_ = RevisedSimplex(lp.a, lp.b, lp.c, refactor_every=1000).solve()
        assert np.allclose(x1, x2, atol=1e-9)


class TestAssembly:
    def test_shape_and_tags(self, exponential_space, two_controls):
        lp = assemble_lp(exponential_space, two_controls, controls_weights(5, 2, -1), objective_seed=1)
        assert lp.shape == (5 + 2 * 4 + 8, 40)
        assert len(lp.rows('i')) == 5
        assert len(lp.rows('ii')) == 8
        assert len(lp.rows('iii')) == 8
        assert lp.support_bound == 16
        assert lp.rank() <= 16
        assert lp.cell(lp.column(3, 6)) == (3, 6)

    def test_product_design_is_feasible(self, exponential_space, two_controls):
        w = controls_weights(5, 2, -1)
        lp = assemble_lp(exponential_space, two_controls, w, objective_seed=1)
        assert lp.residual(np.outer(w.w, np.full(8, 1 / 8)).ravel()) <= 1e-12

    def test_seeded_objective(self, exponential_space, two_controls):
        w = controls_weights(5, 2, -1)
        a = assemble_lp(exponential_space, two_controls, w, objective_seed=9)
        b = assemble_lp(exponential_space, two_controls, w, objective_seed=9)
        assert np.array_equal(a.c, b.c)
        assert np.all((a.c >= 0) & (a.c < 1))

    def test_rejects_zero_weight(self, exponential_space, two_controls):
        with pytest.raises(SingularWeights):
            assemble_lp(exponential_space, two_controls, [0.5, 0.5, 0.0, 0.0, 0.0])

    def test_rejects_wrong_length(self, exponential_space, two_controls):
        with pytest.raises(InvalidDesign):
            assemble_lp(exponential_space, two_controls, [0.5, 0.5])

    def test_blocktrend_rows(self):
        q = controls_contrasts(3, 1)
        lp = assemble_lp_blocktrend(3, 8, 2, q, [0.5, 0.25, 0.25], seed=4)
        assert len(lp.rows('ii.a')) == 2 * 3
        assert len(lp.rows('ii.b')) == 2 * 3
        assert lp.support_bound == 33


class TestVertexDesigns:
    def test_exponential_trend_example(self, exponential_space, two_controls, a_criterion):
        w = optimize_weights(two_controls, a_criterion)
        solution = construct_vertex_design(exponential_space, two_controls, w, seed=2024)
        assert exponential_space.n <= solution.support_size <= 16
        assert verify_optimality(solution.design, two_controls, a_criterion, tol=1e-8, w_star=w).optimal
        assert solution.summary()['support_bound'] == 16

    def test_nonuniform_condition_weights(self, two_controls, a_criterion):
        space = build_exponential_trend(8).space(5)
        alpha = np.linspace(1, 2, 8)
        alpha /= alpha.sum()
        w = controls_weights(5, 2, -1)
        xi = construct_vertex_design(space, two_controls, w, seed=5, alpha=alpha).design
        assert np.allclose(xi.dense().sum(axis=0), alpha, atol=1e-9)
        assert is_balanced(xi, tol=1e-8).is_balanced

    def test_blocktrend_example(self):
        q = controls_contrasts(3, 1)
        crit = Criterion.parse('E')
        w = optimize_weights(q, crit)
        lp = assemble_lp_blocktrend(3, 8, 2, q, w, seed=11)
        solution = solve_vertex(lp)
        assert 24 <= solution.support_size <= 33
        assert verify_optimality(solution.design, q, crit, tol=1e-8, w_star=w).optimal

    @pytest.mark.slow
    @pytest.mark.parametrize('v, n, degree, bound', SUPPORT_BOUNDS)
    def test_support_bounds(self, v, n, degree, bound):
        space = build_poly_trend(n, degree).space(v)
        q = controls_contrasts(v, 1)
        w = optimize_weights(q, Criterion.parse('A'))
        lp = assemble_lp(space, q, w, objective_seed=v * 1000 + n + degree)
        assert lp.support_bound == bound
        solution = solve_vertex(lp)
        assert n <= solution.support_size <= bound
        assert isinstance(solution.design, Design)


class TestBadlyScaledRegressors:
    def test_balance_basis_spans_the_regressor(self):
        h = build_exponential_trend(100).regressor
        basis = balance_basis(h)
        assert basis.shape == (100, 2)
        assert np.allclose(basis.T @ basis, np.eye(2), atol=1e-12)
        # h lies in the span of the basis
        assert np.allclose(basis @ (basis.T @ h), h, atol=1e-12)

    def test_balance_rows_have_unit_scale(self):
        space = build_exponential_trend(100).space(5)
        lp = assemble_lp(space, controls_contrasts(5, 2), controls_weights(5, 2, -1))
        rows = lp.a[lp.rows('ii')]
        assert np.allclose(np.max(np.abs(rows), axis=1), 1.0)

    @pytest.mark.parametrize('n', [50, pytest.param(100, marks=pytest.mark.slow)])
    def test_exponential_trend_long_series(self, n, a_criterion):
        q = controls_contrasts(5, 2)
        space = build_exponential_trend(n).space(5)
        w = controls_weights(5, 2, -1)
        solution = construct_vertex_design(space, q, w)
        assert n <= solution.support_size <= solution.support_bound == 5 + 4 + n - 1
        assert is_balanced(solution.design, tol=1e-7).is_balanced
        assert verify_optimality(solution.design, q, a_criterion, tol=1e-7, w_star=w).optimal
