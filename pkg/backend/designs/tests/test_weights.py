import math

import numpy as np
import pytest

from backend.designs.contrasts import (
    centered_contrasts, controls_contrasts, custom_contrasts, orthonormal_contrasts, pairwise_contrasts,
)
from backend.designs.criteria import Criterion, weights_value
from backend.designs.exceptions import InvalidControlCount, InvalidP, UnsupportedCriterion
from backend.designs.weights import (
    EntropicMirrorAscent, controls_weights, gamma_equation, gamma_p, mv_weights, optimal_value,
    optimize_weights, optimize_weights_detailed, uniform_weights,
)

CONTROL_CASES = [(v, g) for v in range(3, 11) for g in range(1, v) if g < v / 2]


class TestGamma:
    def test_two_controls_of_five_under_a(self):
        assert gamma_p(5, 2, -1).gamma == pytest.approx(math.sqrt(6) - 2, abs=1e-10)

    @pytest.mark.parametrize('v, g', CONTROL_CASES)
    def test_d_criterion_is_proportional(self, v, g):
        assert gamma_p(v, g, 0).gamma == pytest.approx(g / v, abs=1e-12)

    @pytest.mark.parametrize('v, g', CONTROL_CASES)
    def test_e_criterion_is_half(self, v, g):
        assert gamma_p(v, g, -math.inf).gamma == 0.5

    @pytest.mark.parametrize('p', [-0.25, -0.5, -2.0, -5.0, -20.0])
    @pytest.mark.parametrize('v, g', [(5, 2), (7, 1), (9, 4)])
    def test_root_of_gamma_equation(self, v, g, p):
        gamma = gamma_p(v, g, p).gamma
        assert 0 < gamma <= 0.5
        assert abs(gamma_equation(v, g, p)(gamma)[0]) <= 1e-10

    def test_monotone_in_p(self):
        gammas = [gamma_p(7, 2, p).gamma for p in (0, -0.5, -1, -3, -10)]
        assert all(a <= b + 1e-12 for a, b in zip(gammas, gammas[1:]))

    def test_invalid_inputs(self):
        with pytest.raises(InvalidControlCount):
            gamma_p(4, 2, -1)
        with pytest.raises(InvalidP):
            gamma_p(5, 2, 0.5)


class TestClosedForms:
    def test_controls_weights_example(self):
        w = controls_weights(5, 2, -1).w
        assert np.allclose(w, [0.224745, 0.224745, 0.183503, 0.183503, 0.183503], atol=1e-6)

    @pytest.mark.parametrize('v, g', [(v, g) for v, g in CONTROL_CASES if v <= 12])
    def test_mv_equals_a(self, v, g):
        assert np.array_equal(mv_weights(v, g).w, controls_weights(v, g, -1).w)

    def test_auto_uses_closed_forms(self):
        result = optimize_weights_detailed(centered_contrasts(4), Criterion.parse('E'))
        assert result.method == 'symmetric'
        assert np.allclose(result.weights.w, 0.25)
        result = optimize_weights_detailed(controls_contrasts(5, 2), Criterion.mv())
        assert result.method == 'controls'
        assert np.array_equal(result.weights.w, controls_weights(5, 2, -1).w)

    def test_generic_e_matches_closed_form(self):
        # the controls system written out by hand, so the closed form is bypassed
        q = custom_contrasts([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
        crit = Criterion.parse('E')
        result = optimize_weights_detailed(q, crit)
        assert result.method == 'generic'
        closed = weights_value(controls_weights(3, 1, -math.inf), q, crit)
        assert result.value == pytest.approx(closed, rel=2e-3)
        assert result.value <= closed * (1 + 1e-9)

    def test_generic_e_beats_a_simplex_grid(self):
        q = custom_contrasts([[1.0, 0.0], [-1.0, 1.0], [0.0, -1.0]])
        crit = Criterion.parse('E')
        result = optimize_weights_detailed(q, crit)
        step = 1 / 200
        grid = [
            (a * step, b * step, 1 - (a + b) * step)
            for a in range(1, 200) for b in range(1, 200 - a)
        ]
        best = max(weights_value(np.array(w), q, crit) for w in grid)
        assert result.value >= best * (1 - 2e-3)

    def test_generic_mv_unsupported(self):
        q = custom_contrasts([[1.0, 0.0], [-1.0, 1.0], [0.0, -1.0]])
        with pytest.raises(UnsupportedCriterion):
            optimize_weights(q, Criterion.mv())


class TestGenericOptimizer:
    def test_gradient_matches_finite_differences(self, rng):
        q = controls_contrasts(5, 2)
        solver = EntropicMirrorAscent(q, -1.5)
        w = rng.dirichlet(np.ones(5))
        grad = solver.gradient(w)
        h = 1e-6
        for u in range(5):
            up, down = w.copy(), w.copy()
            up[u] += h
            down[u] -= h
            fd = (solver.objective(up) - solver.objective(down)) / (2 * h)
            assert grad[u] == pytest.approx(fd, rel=1e-5)

    @pytest.mark.parametrize('build, v', [
        (orthonormal_contrasts, 4), (centered_contrasts, 6), (pairwise_contrasts, 5), (orthonormal_contrasts, 8),
    ])
    @pytest.mark.parametrize('p', [0.0, -1.0, -2.0])
    def test_uniform_for_completely_symmetric(self, build, v, p):
        q = build(v)
        crit = Criterion.phi(p)
        result = optimize_weights_detailed(q, crit, method='generic')
        assert np.allclose(result.weights.w, 1.0 / v, atol=1e-4)
        assert result.value == pytest.approx(weights_value(uniform_weights(v), q, crit), rel=1e-6)

    @pytest.mark.parametrize('p', [0.0, -0.5, -1.0, -2.0])
    @pytest.mark.parametrize('v, g', [(3, 1), (5, 2), (7, 3), (8, 1)])
    def test_matches_controls_closed_form(self, v, g, p):
        q = controls_contrasts(v, g)
        crit = Criterion.phi(p)
        result = optimize_weights_detailed(q, crit, method='generic')
        expected = controls_weights(v, g, p)
        assert np.allclose(result.weights.w, expected.w, atol=1e-4)
        assert result.value == pytest.approx(weights_value(expected, q, crit), rel=1e-6)

    def test_seed_reproducible(self):
        q = custom_contrasts([[1.0, 0.0], [-1.0, 1.0], [0.0, -1.0]])
        a = optimize_weights(q, Criterion.parse('A'), method='generic', seed=7)
        b = optimize_weights(q, Criterion.parse('A'), method='generic', seed=7)
        assert np.array_equal(a.w, b.w)


def test_optimal_value_of_controls():
    q = controls_contrasts(5, 2)
    crit = Criterion.parse('A')
    assert optimal_value(q, crit) == pytest.approx(weights_value(controls_weights(5, 2, -1), q, crit))
