"""Nuisance regressors h(t) for trends, blocks and row-column layouts.

Time conditions are labelled ``1..n``; block conditions ``1..b``; row-column
cells ``k:l``; positions inside blocks ``block:position``.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from .core import Design, DesignSpace
from .exceptions import DegreeTooHigh, InvalidDesign, SpecError
from .linalg import matrix_rank

logger = logging.getLogger(__name__)

POLY = 'poly'
TRIG = 'trig'
EXPONENTIAL = 'exp'
BLOCK = 'block'
ROWCOL = 'rowcol'
BLOCKTREND = 'blocktrend'
CUSTOM = 'custom'
NONE = 'none'

MODEL_KINDS = (POLY, TRIG, EXPONENTIAL, BLOCK, ROWCOL, BLOCKTREND, CUSTOM, NONE)


@dataclass(frozen=True, eq=False)
class NuisanceModel:
    kind: str
    conditions: tuple
    regressor: np.ndarray
    params: dict = field(default_factory=dict)
    columns: tuple = ()

    @property
    def n(self):
        return len(self.conditions)

    @property
    def d(self):
        return self.regressor.shape[1]

    def space(self, v):
        return DesignSpace(v, self.conditions, self.regressor, name=self.describe())

    def describe(self):
        if not self.params:
            return self.kind
        args = ', '.join(f'{k}={v}' for k, v in self.params.items())
        return f'{self.kind}({args})'

    @property
    def is_blocked(self):
        return self.kind in (BLOCKTREND, ROWCOL)


def _times(n):
    return tuple(str(t) for t in range(1, n + 1))


def _gram_schmidt(x):
    q = np.array(x, dtype=float)
    for _ in range(2):
        for j in range(q.shape[1]):
            for i in range(j):
                q[:, j] -= (q[:, i] @ q[:, j]) * q[:, i]
            norm = np.linalg.norm(q[:, j])
            if norm <= 1e-12:
                raise DegreeTooHigh('polynomial columns became linearly dependent')
            q[:, j] /= norm
    return q


def poly_columns(n, degree):
    "Discrete orthogonal polynomials p_0..p_D on t = 1..n with p_0 = 1 and p_i(1) = 1."
    if degree < 0 or int(degree) != degree:
        raise DegreeTooHigh(f'degree must be a nonnegative integer, got {degree}')
    if n < degree + 1:
        raise DegreeTooHigh(f'polynomial degree {degree} needs at least {degree + 1} conditions, got {n}')
    t = np.arange(1, n + 1, dtype=float)
    x = (t - (n + 1) / 2) / ((n - 1) / 2) if n > 1 else np.zeros(1)
    basis = _gram_schmidt(np.vander(x, degree + 1, increasing=True))
    first = basis[0]
    if np.any(np.abs(first) <= 1e-12):
        raise DegreeTooHigh('a polynomial vanishes at the first condition and cannot be normalized')
    return basis / first


def build_poly_trend(n, D):
    h = poly_columns(n, D)
    return NuisanceModel(POLY, _times(n), h, {'n': n, 'degree': D}, tuple(f'p{i}' for i in range(D + 1)))


def build_trig_trend(n, D, frequencies=None):
    """Constant plus cos/sin pairs at frequencies k * 2π/n.

    ``frequencies`` defaults to 1..D.
    """
    freqs = list(range(1, D + 1)) if frequencies is None else [int(a) for a in frequencies]
    if any(a < 1 for a in freqs):
        raise DegreeTooHigh('frequencies must be positive integers')
    if 2 * len(freqs) + 1 > n:
        raise DegreeTooHigh(f'trigonometric trend with {len(freqs)} frequencies needs n >= {2 * len(freqs) + 1}, got {n}')
    t = np.arange(1, n + 1, dtype=float)
    phi = 2 * np.pi / n
    cols, names = [np.ones(n)], ['1']
    for a in freqs:
        cols += [np.cos(a * phi * t), np.sin(a * phi * t)]
        names += [f'cos{a}', f'sin{a}']
    params = {'n': n, 'degree': D} if frequencies is None else {'n': n, 'frequencies': freqs}
    return NuisanceModel(TRIG, _times(n), np.column_stack(cols), params, tuple(names))


def build_exponential_trend(n):
    "Constant plus h_1(t) = e^t / Σ_j e^j."
    if n < 1:
        raise InvalidDesign('need at least one condition')
    t = np.arange(1, n + 1, dtype=float)
    e = np.exp(t - n)
    h = np.column_stack([np.ones(n), e / e.sum()])
    return NuisanceModel(EXPONENTIAL, _times(n), h, {'n': n}, ('1', 'exp'))


def build_block(b):
    _check_size(b=b)
    return NuisanceModel(BLOCK, _times(b), np.eye(b), {'blocks': b}, tuple(f'block{k}' for k in range(1, b + 1)))


def build_rowcolumn(b1, b2):
    _check_size(rows=b1, cols=b2)
    conditions, h = [], []
    for k in range(b1):
        for l in range(b2):
            conditions.append(f'{k + 1}:{l + 1}')
            h.append(np.concatenate([np.eye(b1)[k], np.eye(b2)[l]]))
    names = tuple(f'row{k}' for k in range(1, b1 + 1)) + tuple(f'col{l}' for l in range(1, b2 + 1))
    return NuisanceModel(ROWCOL, tuple(conditions), np.array(h), {'rows': b1, 'cols': b2}, names)


def build_blocktrend(b, l, D):
    "b blocks of l positions with a trend of degree D in the position shared by all blocks."
    _check_size(blocks=b, blocksize=l)
    p = poly_columns(l, D)
    conditions, h = [], []
    for k in range(b):
        for pos in range(l):
            conditions.append(f'{k + 1}:{pos + 1}')
            h.append(np.concatenate([np.eye(b)[k], p[pos]]))
    names = tuple(f'block{k}' for k in range(1, b + 1)) + tuple(f'p{i}' for i in range(D + 1))
    return NuisanceModel(BLOCKTREND, tuple(conditions), np.array(h), {'blocks': b, 'blocksize': l, 'degree': D}, names)


def build_custom(table, conditions=None, columns=()):
    h = np.asarray(table, dtype=float)
    if h.ndim == 1:
        h = h[:, None]
    if h.ndim != 2 or h.shape[0] < 1:
        raise InvalidDesign('custom nuisance table needs one row per condition')
    conditions = _times(h.shape[0]) if conditions is None else tuple(str(c) for c in conditions)
    return NuisanceModel(CUSTOM, conditions, h, {}, tuple(columns) or tuple(f'h{k}' for k in range(1, h.shape[1] + 1)))


def build_none(n):
    return NuisanceModel(NONE, _times(n), np.zeros((n, 0)), {'n': n})


def build_model(kind, n=None, degree=None, blocks=None, blocksize=None, rows=None, cols=None, table=None):
    "Dispatch on ``kind`` with the CLI parameter names."
    def need(**values):
        missing = [k for k, v in values.items() if v is None]
        if missing:
            raise SpecError(f'model {kind!r} needs {", ".join("--" + k for k in missing)}')

    if kind == POLY:
        need(n=n, degree=degree)
        return build_poly_trend(n, degree)
    if kind == TRIG:
        need(n=n, degree=degree)
        return build_trig_trend(n, degree)
    if kind == EXPONENTIAL:
        need(n=n)
        return build_exponential_trend(n)
    if kind == BLOCK:
        need(blocks=blocks)
        return build_block(blocks)
    if kind == ROWCOL:
        need(rows=rows, cols=cols)
        return build_rowcolumn(rows, cols)
    if kind == BLOCKTREND:
        need(blocks=blocks, blocksize=blocksize, degree=degree)
        return build_blocktrend(blocks, blocksize, degree)
    if kind == CUSTOM:
        if table is None:
            raise SpecError('model custom needs --nuisance-csv')
        return table
    if kind == NONE:
        need(n=n)
        return build_none(n)
    raise SpecError(f'unknown model {kind!r}; choose from {", ".join(MODEL_KINDS)}')


def affine_dimension(h, rtol=1e-10):
    "Dimension of the affine hull of the rows of h."
    h = np.asarray(h, dtype=float)
    if h.shape[0] <= 1 or h.shape[1] == 0:
        return 0
    return matrix_rank(h[1:] - h[0], rtol)


def replicate_sequence(sequence, m):
    if m < 1:
        raise InvalidDesign(f'replication count must be positive, got {m}')
    return list(sequence) * m


def replicate_design(xi_p, m, space):
    """m-fold replication of a one-trial-per-condition design onto ``space``.

    ``space`` must have ``m * xi_p.space.n`` conditions.
    """
    if space.n != m * xi_p.space.n:
        raise InvalidDesign(f'replicating {xi_p.space.n} conditions {m} times needs {m * xi_p.space.n}, got {space.n}')
    return Design.from_sequence(space, replicate_sequence(xi_p.to_sequence(), m))


def _check_size(**sizes):
    for name, value in sizes.items():
        if value is None or int(value) != value or value < 1:
            raise SpecError(f'--{name} must be a positive integer, got {value}')
