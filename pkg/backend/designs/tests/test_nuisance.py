import numpy as np
import pytest

from backend.designs.core import Design
from backend.designs.exceptions import DegreeTooHigh, InvalidDesign, SpecError
from backend.designs.nuisance import (
    BLOCKTREND, affine_dimension, build_block, build_blocktrend, build_custom, build_exponential_trend,
    build_model, build_none, build_poly_trend, build_rowcolumn, build_trig_trend, poly_columns,
    replicate_design, replicate_sequence,
)


class TestPolynomials:
    @pytest.mark.parametrize('n, degree', [(8, 1), (8, 3), (120, 5), (5, 4)])
    def test_orthogonal_and_normalized(self, n, degree):
        p = poly_columns(n, degree)
        gram = p.T @ p
        assert np.allclose(gram - np.diag(np.diag(gram)), 0.0, atol=1e-9 * np.max(np.diag(gram)))
        assert np.allclose(p[0], 1.0)
        assert np.allclose(p[:, 0], 1.0)

    def test_degree_too_high(self):
        with pytest.raises(DegreeTooHigh):
            poly_columns(3, 3)

    def test_linear_column_is_affine_in_time(self):
        p = poly_columns(6, 1)[:, 1]
        assert np.allclose(np.diff(p, 2), 0.0)


class TestBuilders:
    def test_trig_columns(self):
        model = build_trig_trend(16, 3)
        assert model.d == 7
        assert model.columns[:3] == ('1', 'cos1', 'sin1')

    def test_trig_needs_enough_times(self):
        with pytest.raises(DegreeTooHigh):
            build_trig_trend(4, 2)

    def test_exponential_column_sums_to_one(self):
        h = build_exponential_trend(8).regressor
        assert h[:, 1].sum() == pytest.approx(1.0)
        assert np.all(np.diff(h[:, 1]) > 0)

    def test_block_and_rowcolumn(self):
        assert build_block(3).regressor.shape == (3, 3)
        model = build_rowcolumn(2, 3)
        assert model.conditions[:4] == ('1:1', '1:2', '1:3', '2:1')
        assert model.regressor.shape == (6, 5)

    def test_blocktrend_layout(self):
        model = build_blocktrend(3, 8, 2)
        assert model.n == 24
        assert model.d == 3 + 3
        assert model.conditions[8] == '2:1'
        assert model.is_blocked

    def test_custom_labels(self):
        model = build_custom([[1.0, 0.2], [1.0, 0.4]], conditions=['a', 'b'])
        assert model.conditions == ('a', 'b')
        assert model.columns == ('h1', 'h2')

    def test_none_model(self):
        assert build_none(4).d == 0


class TestBuildModel:
    def test_dispatch(self):
        model = build_model(BLOCKTREND, blocks=3, blocksize=8, degree=2)
        assert model.describe() == 'blocktrend(blocks=3, blocksize=8, degree=2)'

    def test_missing_parameter(self):
        with pytest.raises(SpecError, match='--degree'):
            build_model('poly', n=10)

    def test_unknown_kind(self):
        with pytest.raises(SpecError):
            build_model('spline', n=10)

    def test_bad_size(self):
        with pytest.raises(SpecError):
            build_model('block', blocks=0)


class TestAffineDimension:
    def test_models(self):
        assert affine_dimension(build_poly_trend(10, 3).regressor) == 3
        assert affine_dimension(build_block(4).regressor) == 3
        assert affine_dimension(build_exponential_trend(8).regressor) == 1
        assert affine_dimension(build_blocktrend(3, 8, 2).regressor) == 4
        assert affine_dimension(build_none(5).regressor) == 0


class TestReplication:
    def test_sequence(self):
        assert replicate_sequence([1, 0, 0, 2], 2) == [1, 0, 0, 2, 1, 0, 0, 2]
        with pytest.raises(InvalidDesign):
            replicate_sequence([0], 0)

    def test_design(self):
        base = Design.from_sequence(build_none(3).space(3), [0, 1, 2])
        xi = replicate_design(base, 4, build_trig_trend(12, 3).space(3))
        assert xi.to_sequence() == [0, 1, 2] * 4

    def test_design_size_mismatch(self):
        base = Design.from_sequence(build_none(3).space(3), [0, 1, 2])
        with pytest.raises(InvalidDesign):
            replicate_design(base, 4, build_trig_trend(16, 3).space(3))
