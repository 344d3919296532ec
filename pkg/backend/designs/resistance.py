"""Balance, nuisance resistance and the optimality verifier.

A design is balanced when every treatment has the same barycentre
``w_u⁻¹ Σ_t ξ(u,t) h(t)``, and resistant when the matrix of barycentres
annihilates Q. Balanced designs are resistant for every Q.
"""
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from .conf import DEFAULT_TOLERANCES
from .core import Design, q_matrix
from .exceptions import InvalidDesign, NonUniformAlpha, ZeroTreatmentWeight
from .weights import optimize_weights

logger = logging.getLogger(__name__)


@dataclass
class ResistanceReport:
    is_resistant: bool
    is_balanced: bool
    max_residual: float
    per_regressor_residuals: np.ndarray

    def as_dict(self):
        out = asdict(self)
        out['per_regressor_residuals'] = [float(x) for x in self.per_regressor_residuals]
        return out


@dataclass
class OptimalityReport:
    optimal: bool
    weight_gap: float
    resistance_residual: float
    is_resistant: bool
    is_balanced: bool
    sufficient_only: bool
    weights: list
    optimal_weights: list

    def as_dict(self):
        return asdict(self)


def barycentres(xi):
    "v x d matrix whose row u is w_u⁻¹ Σ_t ξ(u,t) h(t)."
    x = xi.dense()
    w = x.sum(axis=1)
    zero = np.nonzero(w <= 0)[0]
    if len(zero):
        raise ZeroTreatmentWeight(zero)
    return (x @ xi.space.regressor) / w[:, None]


def _balance_residuals(s, reference):
    if s.shape[1] == 0:
        return np.zeros(0)
    return np.max(np.abs(s - reference), axis=0)


def is_balanced(xi, tol=None):
    tol = DEFAULT_TOLERANCES.resistance if tol is None else tol
    s = barycentres(xi)
    per = _balance_residuals(s, s[0])
    residual = float(per.max()) if per.size else 0.0
    balanced = residual <= tol
    return ResistanceReport(balanced, balanced, residual, per)


def is_resistant(xi, Q, tol=None):
    tol = DEFAULT_TOLERANCES.resistance if tol is None else tol
    s = barycentres(xi)
    product = s.T @ q_matrix(Q)
    per = np.max(np.abs(product), axis=1) if product.size else np.zeros(s.shape[1])
    residual = float(per.max()) if per.size else 0.0
    balance = _balance_residuals(s, s[0])
    balanced = bool(balance.size == 0 or balance.max() <= tol)
    return ResistanceReport(residual <= tol, balanced, residual, per)


def is_balanced_uniform_alpha(xi, tol=None, alpha_tol=None):
    "Balance check against the mean regressor, valid when every condition carries weight 1/n."
    tol = DEFAULT_TOLERANCES.resistance if tol is None else tol
    alpha_tol = DEFAULT_TOLERANCES.alpha if alpha_tol is None else alpha_tol
    n = xi.space.n
    alpha = xi.dense().sum(axis=0)
    if np.max(np.abs(alpha - 1.0 / n)) > alpha_tol:
        raise NonUniformAlpha(f'nuisance weights differ from 1/{n} by {np.max(np.abs(alpha - 1.0 / n)):.3g}')
    s = barycentres(xi)
    per = _balance_residuals(s, xi.space.regressor.mean(axis=0))
    residual = float(per.max()) if per.size else 0.0
    balanced = residual <= tol
    return ResistanceReport(balanced, balanced, residual, per)


def product_design(w, alpha, space):
    w = np.asarray(getattr(w, 'w', w), dtype=float)
    alpha = np.asarray(getattr(alpha, 'alpha', alpha), dtype=float)
    if w.size != space.v or alpha.size != space.n:
        raise InvalidDesign(f'product of {w.size} treatment and {alpha.size} condition weights does not fit {space}')
    return Design.from_dense(space, np.outer(w, alpha))


def rowcolumn_marginals(xi, rows, cols):
    """Row and column marginals of ξ(u,·,·)/w_u per treatment for a rows x cols layout.

    Conditions must be ordered row-major, as ``build_rowcolumn`` does.
    """
    if xi.space.n != rows * cols:
        raise InvalidDesign(f'a {rows} x {cols} layout needs {rows * cols} conditions, got {xi.space.n}')
    x = xi.dense().reshape(xi.space.v, rows, cols)
    w = x.sum(axis=(1, 2))
    zero = np.nonzero(w <= 0)[0]
    if len(zero):
        raise ZeroTreatmentWeight(zero)
    x = x / w[:, None, None]
    return x.sum(axis=2), x.sum(axis=1)


def verify_optimality(xi, Q, crit, tol=1e-6, w_star=None, **weight_options):
    """Check the two conditions characterizing optimal designs.

    The design must have optimal treatment proportions and be resistant to
    nuisance effects. For criteria that are not strictly concave (E, MV) a
    positive verdict is sufficient for optimality but a negative one does
    not rule it out, which ``sufficient_only`` reports.
    """
    if w_star is None:
        w_star = optimize_weights(Q, crit, **weight_options)
    w_star = np.asarray(getattr(w_star, 'w', w_star), dtype=float)
    w = xi.dense().sum(axis=1)
    weight_gap = float(np.max(np.abs(w - w_star)))
    try:
        report = is_resistant(xi, Q, tol=tol)
        residual, resistant, balanced = report.max_residual, report.is_resistant, report.is_balanced
    except ZeroTreatmentWeight as exc:
        logger.warning('resistance undefined: %s', exc)
        residual, resistant, balanced = math.inf, False, False
    optimal = weight_gap <= tol and resistant
    logger.info('verify %s: weight gap %.3g, resistance residual %.3g, optimal=%s', crit, weight_gap, residual, optimal)
    return OptimalityReport(
        optimal=bool(optimal),
        weight_gap=weight_gap,
        resistance_residual=float(residual),
        is_resistant=bool(resistant),
        is_balanced=bool(balanced),
        sufficient_only=not crit.strictly_concave,
        weights=[float(x) for x in w],
        optimal_weights=[float(x) for x in w_star],
    )
