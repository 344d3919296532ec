import numpy as np
import pytest

from backend.designs.conf import PUBLISHED_TABLE_TOLERANCE
from backend.designs.contrasts import (
    centered_contrasts, controls_contrasts, custom_contrasts, orthonormal_contrasts, pairwise_contrasts,
)
from backend.designs.core import Design, DesignSpace
from backend.designs.criteria import Criterion, criterion_value, efficiency
from backend.designs.exceptions import InvalidDesign, NonUniformAlpha, ZeroTreatmentWeight
from backend.designs.lp import construct_vertex_design
from backend.designs.nuisance import (
    build_block, build_exponential_trend, build_poly_trend, build_rowcolumn, build_trig_trend, replicate_sequence,
)
from backend.designs.resistance import (
    barycentres, is_balanced, is_balanced_uniform_alpha, is_resistant, product_design, rowcolumn_marginals,
    verify_optimality,
)
from backend.designs.weights import controls_weights, optimal_value

MODELS = [build_poly_trend(8, 2), build_trig_trend(9, 2), build_exponential_trend(8), build_block(4), build_rowcolumn(3, 3)]


def positive_weights(v, rng):
    return 0.5 / v + 0.5 * rng.dirichlet(np.ones(v))


def balanced_design(space, w, rng, spread=0.5):
    "Each treatment gets its own distribution over conditions, all with the same mean regressor."
    n = space.n
    h = np.column_stack([np.ones(n), space.regressor])
    _, s, vt = np.linalg.svd(h.T)
    rank = int(np.sum(s > 1e-10 * s[0]))
    null = vt[rank:].T
    base = 0.5 / n + 0.5 * rng.dirichlet(np.ones(n))
    rows = []
    for u in range(space.v):
        beta = base.copy()
        if null.shape[1]:
            delta = null @ rng.normal(size=null.shape[1])
            beta = base + delta * spread * base.min() / np.max(np.abs(delta))
        rows.append(w[u] * beta)
    return Design.from_dense(space, np.array(rows), normalize=True)


def random_design(space, rng):
    x = rng.uniform(0.1, 1.0, size=(space.v, space.n))
    return Design.from_dense(space, x / x.sum())


class TestBarycentres:
    def test_product_design_is_balanced(self, rng):
        space = build_poly_trend(8, 2).space(4)
        xi = product_design(positive_weights(4, rng), rng.dirichlet(np.ones(8)), space)
        report = is_balanced(xi)
        assert report.is_balanced
        assert report.max_residual <= 1e-12

    def test_zero_treatment_weight(self):
        space = build_block(2).space(3)
        xi = Design(space, {(0, 0): 0.5, (1, 1): 0.5})
        with pytest.raises(ZeroTreatmentWeight):
            barycentres(xi)

    def test_uniform_alpha_variant(self, rng):
        space = build_poly_trend(6, 1).space(3)
        xi = product_design([0.5, 0.25, 0.25], np.full(6, 1 / 6), space)
        assert is_balanced_uniform_alpha(xi).is_balanced
        skewed = product_design([0.5, 0.25, 0.25], rng.dirichlet(np.ones(6)), space)
        with pytest.raises(NonUniformAlpha):
            is_balanced_uniform_alpha(skewed)


class TestBalanceAndResistance:
    def test_balanced_implies_resistant(self, rng):
        for k in range(200):
            model = MODELS[k % len(MODELS)]
            v = 2 + k % 4
            space = model.space(v)
            q = centered_contrasts(v) if k % 2 else orthonormal_contrasts(v)
            balanced = balanced_design(space, positive_weights(v, rng), rng)
            report = is_resistant(balanced, q)
            assert report.is_balanced and report.is_resistant
            assert report.max_residual <= 1e-9

    def test_resistant_iff_balanced_for_rank_v_minus_one(self, rng):
        for k in range(200):
            model = MODELS[k % len(MODELS)]
            v = 3 + k % 3
            space = model.space(v)
            q = controls_contrasts(v, 1) if k % 2 else centered_contrasts(v)
            xi = balanced_design(space, positive_weights(v, rng), rng) if k % 3 == 0 else random_design(space, rng)
            report = is_resistant(xi, q)
            assert report.is_resistant == report.is_balanced

    def test_resistant_without_balance(self, rng):
        # only treatments 1 and 2 are compared, so treatment 3 may sit anywhere
        space = build_poly_trend(6, 1).space(3)
        q = custom_contrasts([[1.0], [-1.0], [0.0]])
        shared = rng.dirichlet(np.ones(6))
        x = np.array([0.4 * shared, 0.4 * shared, 0.2 * np.eye(6)[0]])
        xi = Design.from_dense(space, x, normalize=True)
        report = is_resistant(xi, q)
        assert report.is_resistant
        assert not report.is_balanced

    def test_near_balance_does_not_imply_resistance(self):
        # barycentres 0.5, 0.5 + δ, 0.5 - δ: within tol of treatment 1, but τ_2 - τ_3 sees 2δ
        tol, delta = 1e-3, 8e-4
        space = DesignSpace(3, ('a', 'b'), [[0.0], [1.0]])
        s = np.array([0.5, 0.5 + delta, 0.5 - delta])
        xi = Design.from_dense(space, np.column_stack([1 - s, s]) / 3)
        report = is_resistant(xi, pairwise_contrasts(3), tol=tol)
        assert report.is_balanced
        assert report.max_residual == pytest.approx(2 * delta)
        assert not report.is_resistant

    def test_reparametrization_invariance(self, rng):
        for k in range(60):
            model = MODELS[k % len(MODELS)]
            v = 3 + k % 3
            space = model.space(v)
            q = controls_contrasts(v, 1) if k % 2 else centered_contrasts(v)
            xi = balanced_design(space, positive_weights(v, rng), rng) if k % 3 == 0 else random_design(space, rng)
            r = rng.normal(size=(space.d, space.d)) + 3 * np.eye(space.d)
            moved = Design.from_dense(space.with_regressor(space.regressor @ r), xi.dense())
            before, after = is_resistant(xi, q), is_resistant(moved, q)
            assert before.is_resistant == after.is_resistant
            assert before.is_balanced == after.is_balanced
            assert is_balanced(xi).is_balanced == is_balanced(moved).is_balanced


class TestBlockModel:
    def test_balanced_block_designs_are_products(self, rng):
        for k in range(100):
            v, b = 2 + k % 3, 2 + k % 4
            space = build_block(b).space(v)
            q = controls_contrasts(v, 1) if v > 2 else centered_contrasts(v)
            w = positive_weights(v, rng)
            solution = construct_vertex_design(space, q, w, seed=k)
            xi = solution.design
            assert is_balanced(xi, tol=1e-8).is_balanced
            alpha = xi.dense().sum(axis=0)
            assert np.allclose(xi.dense(), np.outer(w, alpha), atol=1e-8)


class TestRowColumn:
    def test_balanced_designs_share_marginals(self, rng):
        for _ in range(50):
            v = 2 + int(rng.integers(3))
            space = build_rowcolumn(3, 4).space(v)
            xi = balanced_design(space, positive_weights(v, rng), rng)
            rows, cols = rowcolumn_marginals(xi, 3, 4)
            assert np.allclose(rows, rows[0], atol=1e-10)
            assert np.allclose(cols, cols[0], atol=1e-10)

    def test_shared_marginals_give_balance(self, rng):
        for _ in range(50):
            v = 2 + int(rng.integers(3))
            space = build_rowcolumn(3, 4).space(v)
            w = positive_weights(v, rng)
            r, c = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(4))
            base = np.outer(r, c)
            eps = 0.5 * base.min()
            cells = []
            for u in range(v):
                beta = base.copy()
                a1, a2 = rng.choice(3, size=2, replace=False)
                b1, b2 = rng.choice(4, size=2, replace=False)
                beta[a1, b1] += eps
                beta[a2, b2] += eps
                beta[a1, b2] -= eps
                beta[a2, b1] -= eps
                cells.append(w[u] * beta.ravel())
            xi = Design.from_dense(space, np.array(cells), normalize=True)
            assert is_balanced(xi).is_balanced

            # move mass between rows of one treatment only
            x = np.array(cells)
            x[0, 0] += eps * w[0]
            x[0, 4] -= eps * w[0]
            broken = Design.from_dense(space, x, normalize=True)
            rows, _ = rowcolumn_marginals(broken, 3, 4)
            assert not np.allclose(rows[0], rows[1], atol=1e-10)
            assert not is_balanced(broken).is_balanced

    def test_layout_mismatch(self):
        xi = product_design([0.5, 0.5], np.full(6, 1 / 6), build_rowcolumn(2, 3).space(2))
        with pytest.raises(InvalidDesign):
            rowcolumn_marginals(xi, 3, 3)


class TestReplication:
    def test_balance_fails_exactly_at_multiples_of_the_replication_count(self, rng):
        for _ in range(50):
            v, m = 3, 2 + int(rng.integers(3))
            length = 4 + int(rng.integers(4))
            # treatment 1 alone at the first position, the others each at least once
            rest = list(range(1, v)) + list(rng.integers(1, v, size=length - v))
            rng.shuffle(rest)
            base = [0] + rest
            n = m * length
            sequence = replicate_sequence(base, m)
            others = [a for a in range(1, (n - 1) // 2 + 1) if a % m][:3]
            ok = build_trig_trend(n, len(others), frequencies=others).space(v)
            assert is_balanced(Design.from_sequence(ok, sequence), tol=1e-10).is_balanced
            bad = build_trig_trend(n, 1, frequencies=[m]).space(v)
            assert not is_balanced(Design.from_sequence(bad, sequence)).is_balanced


class TestVerifyOptimality:
    def test_published_exponential_design(self, exponential_table_design, two_controls, a_criterion):
        report = verify_optimality(
            exponential_table_design, two_controls, a_criterion, tol=PUBLISHED_TABLE_TOLERANCE,
        )
        assert report.optimal
        assert report.weight_gap < 1e-4
        assert report.sufficient_only is False

    def test_uniform_product_is_not_optimal(self, exponential_space, two_controls, a_criterion):
        xi = product_design(np.full(5, 0.2), np.full(8, 1 / 8), exponential_space)
        report = verify_optimality(xi, two_controls, a_criterion)
        assert not report.optimal
        assert report.is_balanced
        assert efficiency(xi, two_controls, a_criterion, optimal_value(two_controls, a_criterion)) < 1.0

    def test_replicated_run_order_is_e_optimal(self):
        space = build_trig_trend(16, 3).space(3)
        xi = Design.from_sequence(space, replicate_sequence([1, 0, 0, 2], 4))
        assert is_balanced(xi, tol=1e-10).max_residual <= 1e-10
        report = verify_optimality(xi, controls_contrasts(3, 1), Criterion.parse('E'), tol=1e-10)
        assert report.optimal
        assert report.sufficient_only

    def test_replicated_run_order_is_d_optimal(self):
        space = build_trig_trend(12, 3).space(3)
        xi = Design.from_sequence(space, replicate_sequence([2, 1, 0], 4))
        crit = Criterion.parse('D')
        assert verify_optimality(xi, controls_contrasts(3, 1), crit, tol=1e-10).optimal
        assert verify_optimality(xi, orthonormal_contrasts(3), crit, tol=1e-10).optimal

    def test_optimal_design_reaches_optimal_value(self, two_controls, a_criterion):
        space = build_poly_trend(10, 2).space(5)
        xi = product_design(controls_weights(5, 2, -1), np.full(10, 0.1), space)
        assert verify_optimality(xi, two_controls, a_criterion, tol=1e-10).optimal
        assert criterion_value(xi, two_controls, a_criterion) == pytest.approx(
            optimal_value(two_controls, a_criterion), rel=1e-10,
        )
