"""Design and model types and the matrix functionals of a design.

Treatments are indexed ``0..v-1`` internally and shown as ``1..v`` to users.
Conditions are indexed ``0..n-1``; ``DesignSpace.conditions`` carries their
display labels.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from .conf import DEFAULT_TOLERANCES
from .exceptions import InfeasibleDesign, InvalidDesign, SingularWeights
from .linalg import eigh_sym, is_psd, pinv_sym, pseudo_rank, symmetrize

logger = logging.getLogger(__name__)


def _frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def sum_slack(tol, count):
    "Allowed deviation of a sum of ``count`` weights from 1: ``tol`` plus the rounding of the summation."
    return tol + count * np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class DesignSpace:
    """The grid ``{1..v} x T`` with the nuisance regressor ``h``.

    ``regressor`` is an ``n x d`` array whose row ``t`` is ``h(t)``; ``d = 0``
    gives the marginal model without nuisance effects.
    """

    v: int
    conditions: tuple
    regressor: np.ndarray
    name: str = ''

    def __post_init__(self):
        if int(self.v) != self.v or self.v < 2:
            raise InvalidDesign(f'need at least 2 treatments, got v={self.v}')
        conditions = tuple(str(c) for c in self.conditions)
        if not conditions:
            raise InvalidDesign('need at least one nuisance condition')
        if len(set(conditions)) != len(conditions):
            raise InvalidDesign('condition labels must be unique')
        h = np.asarray(self.regressor, dtype=float)
        if h.ndim == 1 and h.size == 0:
            h = h.reshape(len(conditions), 0)
        if h.ndim != 2 or h.shape[0] != len(conditions):
            raise InvalidDesign(
                f'regressor must have one row per condition ({len(conditions)}), got shape {h.shape}'
            )
        if not np.all(np.isfinite(h)):
            raise InvalidDesign('regressor values must be finite')
        object.__setattr__(self, 'v', int(self.v))
        object.__setattr__(self, 'conditions', conditions)
        object.__setattr__(self, 'regressor', _frozen(h))

    @property
    def n(self):
        return len(self.conditions)

    @property
    def d(self):
        return self.regressor.shape[1]

    def h(self, t):
        return self.regressor[t]

    def condition_index(self, label):
        try:
            return self.conditions.index(str(label))
        except ValueError:
            raise InvalidDesign(f'unknown condition {label!r}') from None

    def with_regressor(self, regressor, name=None):
        return DesignSpace(self.v, self.conditions, regressor, self.name if name is None else name)

    def __repr__(self):
        return f'DesignSpace(v={self.v}, n={self.n}, d={self.d}, name={self.name!r})'


@dataclass(frozen=True, eq=False)
class TreatmentWeights:
    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).ravel()
        if w.size < 2:
            raise InvalidDesign('treatment weights need at least two entries')
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InvalidDesign('treatment weights must be finite and nonnegative')
        if abs(w.sum() - 1.0) > sum_slack(DEFAULT_TOLERANCES.weight_sum, w.size):
            raise InvalidDesign(f'treatment weights must sum to 1, got {w.sum():.15g}')
        object.__setattr__(self, 'w', _frozen(w))

    @property
    def v(self):
        return self.w.size

    @property
    def is_positive(self):
        return bool(np.all(self.w > 0))

    def __len__(self):
        return self.w.size

    def __iter__(self):
        return iter(self.w)

    def __repr__(self):
        return 'TreatmentWeights(' + ', '.join(f'{x:.6f}' for x in self.w) + ')'


@dataclass(frozen=True, eq=False)
class NuisanceWeights:
    alpha: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float).ravel()
        if a.size < 1 or np.any(a < 0) or not np.all(np.isfinite(a)):
            raise InvalidDesign('nuisance weights must be finite and nonnegative')
        if abs(a.sum() - 1.0) > sum_slack(DEFAULT_TOLERANCES.weight_sum, a.size):
            raise InvalidDesign(f'nuisance weights must sum to 1, got {a.sum():.15g}')
        object.__setattr__(self, 'alpha', _frozen(a))

    @classmethod
    def uniform(cls, n):
        return cls(np.full(n, 1.0 / n))

    @property
    def n(self):
        return self.alpha.size


class Design:
    """Approximate design: nonnegative weights on the grid summing to one.

    Weights are kept sparse as ``{(u, t): weight}`` over the support.
    Exact designs are the same object with weights that are multiples of 1/N.
    """

    def __init__(self, space, weights, tol=None):
        tol = DEFAULT_TOLERANCES.weight_sum if tol is None else tol
        self.space = space
        support = {}
        for key, value in dict(weights).items():
            u, t = (int(key[0]), int(key[1]))
            value = float(value)
            if not (0 <= u < space.v and 0 <= t < space.n):
                raise InvalidDesign(f'cell (u={u + 1}, t={t}) lies outside the grid')
            if value < 0 or not np.isfinite(value):
                raise InvalidDesign(f'weight of cell (u={u + 1}, t={t}) must be nonnegative, got {value}')
            if value > 0:
                support[(u, t)] = support.get((u, t), 0.0) + value
        total = sum(support.values())
        if abs(total - 1.0) > sum_slack(tol, len(support)):
            raise InvalidDesign(f'design weights must sum to 1, got {total:.15g}')
        self._weights = dict(sorted(support.items()))

    @classmethod
    def from_dense(cls, space, matrix, normalize=False, zero=0.0):
        x = np.array(matrix, dtype=float)
        if x.shape != (space.v, space.n):
            raise InvalidDesign(f'dense design must be {space.v} x {space.n}, got {x.shape}')
        if zero > 0:
            x[np.abs(x) <= zero] = 0.0
        if normalize:
            total = x.sum()
            if total <= 0:
                raise InvalidDesign('design has no positive weight')
            if abs(total - 1.0) > DEFAULT_TOLERANCES.weight_sum:
                logger.warning('renormalizing design weights summing to %.10f', total)
            x = x / total
        rows, cols = np.nonzero(x)
        return cls(space, {(u, t): x[u, t] for u, t in zip(rows, cols)})

    @classmethod
    def from_sequence(cls, space, sequence):
        "Exact design with one trial per condition; ``sequence[t]`` is the treatment (0-based) at ``t``."
        seq = [int(u) for u in sequence]
        if len(seq) != space.n:
            raise InvalidDesign(f'sequence has {len(seq)} entries, the space has {space.n} conditions')
        weights = {}
        for t, u in enumerate(seq):
            weights[(u, t)] = weights.get((u, t), 0.0) + 1.0 / space.n
        return cls(space, weights)

    @property
    def weights(self):
        return dict(self._weights)

    def __getitem__(self, key):
        return self._weights.get((int(key[0]), int(key[1])), 0.0)

    @property
    def support(self):
        return list(self._weights)

    @property
    def support_size(self):
        return len(self._weights)

    def dense(self):
        x = np.zeros((self.space.v, self.space.n))
        for (u, t), value in self._weights.items():
            x[u, t] = value
        return x

    def treatment_weights(self):
        return TreatmentWeights(self.dense().sum(axis=1))

    def nuisance_weights(self):
        return NuisanceWeights(self.dense().sum(axis=0))

    def is_exact(self, size, tol=1e-9):
        counts = np.asarray(list(self._weights.values())) * size
        return bool(np.all(np.abs(counts - np.round(counts)) <= tol))

    def replication_counts(self, size=None):
        "Trials per treatment in an exact design of ``size`` trials (defaults to n)."
        size = self.space.n if size is None else size
        if not self.is_exact(size):
            raise InvalidDesign(f'design is not exact of size {size}')
        return np.rint(self.dense().sum(axis=1) * size).astype(int)

    def to_sequence(self):
        "Treatment (0-based) per condition for one-trial-per-condition exact designs."
        x = self.dense()
        n = self.space.n
        seq = []
        for t in range(n):
            column = x[:, t]
            hits = np.nonzero(column)[0]
            if len(hits) != 1 or abs(column[hits[0]] - 1.0 / n) > 1e-9:
                raise InvalidDesign(f'condition {self.space.conditions[t]} does not hold exactly one trial')
            seq.append(int(hits[0]))
        return seq

    def __repr__(self):
        return f'Design(v={self.space.v}, n={self.space.n}, support={self.support_size})'


@dataclass(frozen=True, eq=False)
class MomentBlocks:
    m11: np.ndarray
    m12: np.ndarray
    m22: np.ndarray

    def full(self):
        return np.block([[self.m11, self.m12], [self.m12.T, self.m22]])

    @property
    def v(self):
        return self.m11.shape[0]

    @property
    def d(self):
        return self.m22.shape[0]


@dataclass(frozen=True, eq=False)
class CMatrix:
    c: np.ndarray
    rank: int

    @property
    def s(self):
        return self.c.shape[0]

    def eigenvalues(self):
        return np.sort(eigh_sym(self.c)[0])[::-1]


def q_matrix(Q):
    "Accept a ContrastSystem or a plain v x s array."
    q = getattr(Q, 'q', Q)
    q = np.asarray(q, dtype=float)
    if q.ndim == 1:
        q = q[:, None]
    return q


def k_matrix(Q, d):
    q = q_matrix(Q)
    return np.vstack([q, np.zeros((d, q.shape[1]))])


def moment_blocks(xi):
    x = xi.dense()
    h = xi.space.regressor
    alpha = x.sum(axis=0)
    m11 = np.diag(x.sum(axis=1))
    m12 = x @ h
    m22 = symmetrize((h * alpha[:, None]).T @ h) if xi.space.d else np.zeros((0, 0))
    return MomentBlocks(m11, m12, m22)


def moment_matrix(xi):
    return moment_blocks(xi).full()


def schur_complement(blocks, rtol=None):
    "M_tau = M11 - M12 M22^+ M12^T."
    rtol = DEFAULT_TOLERANCES.rank if rtol is None else rtol
    if blocks.d == 0:
        return np.array(blocks.m11, dtype=float)
    return symmetrize(blocks.m11 - blocks.m12 @ pinv_sym(blocks.m22, rtol) @ blocks.m12.T)


def is_feasible(xi, Q, tol=None, rtol=None):
    tol = DEFAULT_TOLERANCES.feasibility if tol is None else tol
    rtol = DEFAULT_TOLERANCES.rank if rtol is None else rtol
    m = moment_matrix(xi)
    k = k_matrix(Q, xi.space.d)
    residual = k - m @ pinv_sym(m, rtol) @ k
    return bool(np.max(np.abs(residual)) <= tol)


def variance_matrix(xi, Q, tol=None, rtol=None):
    "Q^T M_tau^- Q, proportional to the covariance of the contrast estimates."
    rtol = DEFAULT_TOLERANCES.rank if rtol is None else rtol
    if not is_feasible(xi, Q, tol=tol, rtol=rtol):
        raise InfeasibleDesign('the contrasts are not estimable under this design')
    q = q_matrix(Q)
    mt = schur_complement(moment_blocks(xi), rtol)
    return symmetrize(q.T @ pinv_sym(mt, rtol) @ q)


def c_matrix(xi, Q, tol=None, rtol=None):
    "C_K(xi) = (Q^T M_tau^+ Q)^+; the information matrix N_K(xi) when Q has full column rank."
    rtol = DEFAULT_TOLERANCES.rank if rtol is None else rtol
    c = pinv_sym(variance_matrix(xi, Q, tol=tol, rtol=rtol), rtol)
    return CMatrix(symmetrize(c), int(pseudo_rank(c, rtol)))


def information_weights(w, Q, rtol=None):
    "C_Q(w) = (Q^T diag(w^-1) Q)^+ for a treatment proportions design w > 0."
    rtol = DEFAULT_TOLERANCES.rank if rtol is None else rtol
    w = np.asarray(getattr(w, 'w', w), dtype=float)
    if np.any(w <= 0):
        raise SingularWeights('treatment proportions must be positive for the marginal information matrix')
    q = q_matrix(Q)
    c = pinv_sym(q.T @ (q / w[:, None]), rtol)
    return CMatrix(symmetrize(c), int(pseudo_rank(c, rtol)))


def certificate_holds(xi, w, Q, tol=None):
    """Check M(xi) G K = K with G = diag(w^-1, 0).

    Equivalent to: xi has treatment proportions w and is resistant to
    nuisance effects.
    """
    tol = DEFAULT_TOLERANCES.certificate if tol is None else tol
    w = np.asarray(getattr(w, 'w', w), dtype=float)
    if np.any(w <= 0):
        raise SingularWeights('the certificate needs strictly positive treatment proportions')
    d = xi.space.d
    k = k_matrix(Q, d)
    g = np.diag(np.concatenate([1.0 / w, np.zeros(d)]))
    residual = moment_matrix(xi) @ g @ k - k
    return bool(np.max(np.abs(residual)) <= tol)


def check_moment_blocks(blocks, rtol=1e-10):
    "Validate the MomentBlocks invariants; returns the list of violations."
    problems = []
    if np.any(np.abs(blocks.m11 - np.diag(np.diag(blocks.m11))) > 0):
        problems.append('m11 is not diagonal')
    if np.any(np.diag(blocks.m11) < 0):
        problems.append('m11 has negative entries')
    if blocks.d and not is_psd(blocks.m22, rtol):
        problems.append('m22 is not positive semidefinite')
    if not is_psd(blocks.full(), rtol):
        problems.append('moment matrix is not positive semidefinite')
    return problems
