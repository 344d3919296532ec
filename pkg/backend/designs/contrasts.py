"""Contrast systems Q (v x s, columns sum to zero)."""
from dataclasses import dataclass, field

import numpy as np

from .conf import DEFAULT_TOLERANCES
from .exceptions import InvalidContrasts, InvalidControlCount
from .linalg import matrix_rank

ORTHONORMAL = 'orthonormal'
CENTERED = 'centered'
PAIRWISE = 'pairwise'
CONTROLS = 'controls'
CUSTOM = 'custom'

KINDS = (ORTHONORMAL, CENTERED, PAIRWISE, CONTROLS, CUSTOM)


@dataclass(frozen=True, eq=False)
class ContrastSystem:
    q: np.ndarray
    kind: str = CUSTOM
    g: int = None
    labels: tuple = field(default=())

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        if q.ndim == 1:
            q = q[:, None]
        if q.ndim != 2 or q.shape[0] < 2 or q.shape[1] < 1:
            raise InvalidContrasts(f'contrast matrix must be v x s with v >= 2, got shape {q.shape}')
        if self.kind not in KINDS:
            raise InvalidContrasts(f'unknown contrast kind {self.kind!r}')
        if not np.all(np.isfinite(q)):
            raise InvalidContrasts('contrast matrix has non-finite entries')
        colsum = np.abs(q.sum(axis=0))
        scale = max(1.0, np.max(np.abs(q)))
        if np.max(colsum) > DEFAULT_TOLERANCES.weight_sum * scale * q.shape[0]:
            raise InvalidContrasts(f'columns of Q must sum to zero (max column sum {np.max(colsum):.3g})')
        zero_rows = np.nonzero(np.max(np.abs(q), axis=1) <= DEFAULT_TOLERANCES.zero_row)[0]
        if len(zero_rows):
            labels = ', '.join(str(u + 1) for u in zero_rows)
            raise InvalidContrasts(f'treatment(s) {labels} do not appear in any contrast')
        if self.kind == CONTROLS:
            v = q.shape[0]
            if self.g is None or not 0 < self.g < v / 2:
                raise InvalidControlCount(v, self.g)
        labels = tuple(self.labels) or tuple(f'c{j + 1}' for j in range(q.shape[1]))
        if len(labels) != q.shape[1]:
            raise InvalidContrasts('one label per contrast column is required')
        q.flags.writeable = False
        object.__setattr__(self, 'q', q)
        object.__setattr__(self, 'labels', labels)

    @property
    def v(self):
        return self.q.shape[0]

    @property
    def s(self):
        return self.q.shape[1]

    @property
    def rank(self):
        return matrix_rank(self.q, DEFAULT_TOLERANCES.rank)

    @property
    def is_full_rank(self):
        return self.rank == self.s

    def describe(self):
        if self.kind == CONTROLS:
            return f'controls(g={self.g})'
        return self.kind

    def __repr__(self):
        return f'ContrastSystem({self.describe()}, v={self.v}, s={self.s})'


def _diff_label(i, j):
    return f't{i + 1}-t{j + 1}'


def orthonormal_contrasts(v):
    """Helmert contrasts: column k compares treatment k+1 with the mean of 1..k.

    QᵀQ = I and QQᵀ = I - J/v.
    """
    _check_v(v)
    q = np.zeros((v, v - 1))
    for k in range(1, v):
        scale = np.sqrt(k * (k + 1))
        q[:k, k - 1] = 1.0 / scale
        q[k, k - 1] = -k / scale
    labels = tuple(f'helmert{k}' for k in range(1, v))
    return ContrastSystem(q, ORTHONORMAL, labels=labels)


def centered_contrasts(v):
    _check_v(v)
    q = np.eye(v) - np.full((v, v), 1.0 / v)
    return ContrastSystem(q, CENTERED, labels=tuple(f't{u + 1}-mean' for u in range(v)))


def pairwise_contrasts(v):
    "All differences e_i - e_j with i > j."
    _check_v(v)
    columns, labels = [], []
    for i in range(1, v):
        for j in range(i):
            col = np.zeros(v)
            col[i], col[j] = 1.0, -1.0
            columns.append(col)
            labels.append(_diff_label(i, j))
    return ContrastSystem(np.column_stack(columns), PAIRWISE, labels=tuple(labels))


def controls_contrasts(v, g):
    "Treatments 1..g are controls; column (i, j) is τ_j - τ_i for control i and test treatment j."
    _check_v(v)
    if g is None or int(g) != g or not 0 < g < v / 2:
        raise InvalidControlCount(v, g)
    g = int(g)
    columns, labels = [], []
    for i in range(g):
        for j in range(g, v):
            col = np.zeros(v)
            col[i], col[j] = -1.0, 1.0
            columns.append(col)
            labels.append(_diff_label(j, i))
    return ContrastSystem(np.column_stack(columns), CONTROLS, g=g, labels=tuple(labels))


def custom_contrasts(q, labels=()):
    return ContrastSystem(q, CUSTOM, labels=tuple(labels))


def build_contrasts(kind, v, g=None):
    if kind == ORTHONORMAL:
        return orthonormal_contrasts(v)
    if kind == CENTERED:
        return centered_contrasts(v)
    if kind == PAIRWISE:
        return pairwise_contrasts(v)
    if kind == CONTROLS:
        return controls_contrasts(v, g)
    raise InvalidContrasts(f'unknown contrast kind {kind!r}; choose from {", ".join(KINDS[:-1])}')


def complete_symmetry_scale(Q):
    "The a in QQᵀ = a(I - J/v), or None when QQᵀ is not of that form."
    q = getattr(Q, 'q', Q)
    v = q.shape[0]
    qq = q @ q.T
    a = np.trace(qq) / (v - 1)
    target = a * (np.eye(v) - np.full((v, v), 1.0 / v))
    if a <= 0 or np.max(np.abs(qq - target)) > DEFAULT_TOLERANCES.complete_symmetry * max(1.0, a):
        return None
    return float(a)


def is_completely_symmetric(Q):
    return complete_symmetry_scale(Q) is not None


def _check_v(v):
    if int(v) != v or v < 2:
        raise InvalidContrasts(f'need at least 2 treatments, got v={v}')
