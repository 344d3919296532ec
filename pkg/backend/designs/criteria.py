"""Kiefer's Phi_p criteria (p in [-inf, 0]) and the MV criterion.

Phi_p values are maximized; the MV value (largest contrast variance) is
minimized, so ``Criterion.score`` flips its sign wherever designs are ranked.
"""
import logging
import math
import re
from dataclasses import dataclass

import numpy as np

from .conf import DEFAULT_TOLERANCES
from .contrasts import CONTROLS, is_completely_symmetric
from .core import c_matrix, information_weights, is_feasible, q_matrix, variance_matrix
from .exceptions import InfeasibleDesign, InvalidControlCount, InvalidP, SingularWeights, SpecError
from .linalg import eigh_sym, matrix_rank, positive_mask

logger = logging.getLogger(__name__)

PHI = 'phi'
MV = 'mv'

_NAMED = {'D': 0.0, 'A': -1.0, 'E': -math.inf}


@dataclass(frozen=True)
class Criterion:
    kind: str = PHI
    p: float = 0.0

    def __post_init__(self):
        if self.kind not in (PHI, MV):
            raise SpecError(f'unknown criterion kind {self.kind!r}')
        if self.kind == PHI:
            p = float(self.p)
            if math.isnan(p) or p > 0:
                raise InvalidP(self.p)
            object.__setattr__(self, 'p', p)

    @classmethod
    def phi(cls, p):
        return cls(PHI, p)

    @classmethod
    def mv(cls):
        return cls(MV, 0.0)

    @classmethod
    def parse(cls, text):
        "Accepts D, A, E, MV or p=<x> with x <= 0 (p=-inf allowed)."
        raw = str(text).strip()
        key = raw.upper()
        if key in _NAMED:
            return cls.phi(_NAMED[key])
        if key == 'MV':
            return cls.mv()
        match = re.fullmatch(r'p\s*=\s*(\S+)', raw, flags=re.IGNORECASE)
        if not match:
            raise SpecError(f'cannot parse criterion {text!r}; use D, A, E, MV or p=<value <= 0>')
        try:
            p = float(match.group(1))
        except ValueError:
            raise SpecError(f'cannot parse criterion exponent {match.group(1)!r}') from None
        return cls.phi(p)

    @property
    def is_mv(self):
        return self.kind == MV

    @property
    def is_e(self):
        return self.kind == PHI and self.p == -math.inf

    @property
    def strictly_concave(self):
        "Optimality verdicts are necessary and sufficient only for these criteria."
        return self.kind == PHI and self.p > -math.inf

    @property
    def name(self):
        if self.is_mv:
            return 'MV'
        for label, p in _NAMED.items():
            if self.p == p:
                return label
        return f'p={self.p:g}'

    def score(self, value):
        return -value if self.is_mv else value

    def __str__(self):
        return self.name


def phi_of_eigenvalues(vals, p):
    """Phi_p of positive eigenvalues along the last axis (stacks allowed).

    Callers pass only the eigenvalues that should count; zeros give 0.
    """
    vals = np.asarray(vals, dtype=float)
    if vals.shape[-1] == 0:
        return np.zeros(vals.shape[:-1])
    low = np.min(vals, axis=-1)
    safe = np.where(vals > 0, vals, 1.0)
    singular = low <= 0
    if p == -math.inf:
        out = low
    elif p == 0:
        out = np.exp(np.mean(np.log(safe), axis=-1))
    else:
        # scale by the smallest eigenvalue so that lambda**p stays bounded
        base = np.where(singular, 1.0, low)
        ratio = safe / base[..., None]
        out = base * np.mean(ratio ** p, axis=-1) ** (1.0 / p)
    out = np.where(singular, 0.0, out)
    return out if out.ndim else float(out)


def _check_p(p):
    if p > 0 or math.isnan(p):
        raise InvalidP(p)


def phi_p(h, p, rtol=None):
    "Phi_p of a symmetric PSD matrix; 0 when the matrix is singular."
    _check_p(p)
    rtol = DEFAULT_TOLERANCES.rank if rtol is None else rtol
    vals = eigh_sym(h)[0]
    if vals.size == 0:
        return 0.0
    if vals[-1] <= 0 or vals[0] <= rtol * vals[-1]:
        return 0.0
    return phi_of_eigenvalues(vals, p)


def phi_p_positive(h, rank, p, rtol=None):
    "Phi_p on the ``rank`` largest eigenvalues; 0 if fewer than ``rank`` are positive."
    _check_p(p)
    rtol = DEFAULT_TOLERANCES.rank if rtol is None else rtol
    vals = eigh_sym(h)[0]
    keep = positive_mask(vals, rtol)
    if rank <= 0 or keep.sum() < rank:
        return 0.0
    return phi_of_eigenvalues(np.sort(vals)[::-1][:rank], p)


def mv_value(w, Q):
    "max diag(Qᵀ diag(w⁻¹) Q); smaller is better."
    w = np.asarray(getattr(w, 'w', w), dtype=float)
    if np.any(w <= 0):
        raise SingularWeights('MV needs strictly positive treatment proportions')
    q = q_matrix(Q)
    return float(np.max(np.sum(q * q / w[:, None], axis=0)))


def controls_spectrum(v, g, gamma):
    """Nonzero eigenvalues of C_Q(w_γ) for comparisons with controls, descending.

    w_γ puts γ/g on each of the g controls and (1-γ)/(v-g) on each test
    treatment.
    """
    if not 0 < g < v / 2:
        raise InvalidControlCount(v, g)
    if not 0 < gamma < 1:
        raise SpecError(f'gamma must lie in (0, 1), got {gamma}')
    g1 = gamma / g
    lam1 = (1 - g * g1) / (g * (v - g))
    lam2 = g1 / (v - g)
    lam3 = g1 * (1 - g * g1) / (v - g)
    vals = [lam1] * (v - g - 1) + [lam2] * (g - 1) + [lam3]
    return np.sort(np.array(vals))[::-1]


def weights_value(w, Q, crit, rtol=None):
    "Criterion value of a treatment proportions design in the model without nuisance effects."
    if crit.is_mv:
        return mv_value(w, Q)
    q = q_matrix(Q)
    rank = matrix_rank(q)
    return phi_p_positive(information_weights(w, q, rtol).c, rank, crit.p, rtol)


def criterion_value(xi, Q, crit, tol=None, rtol=None):
    """Criterion value of a design.

    Phi_p runs on the positive spectrum of C_K(xi) with r = rank(Q); MV is
    the largest diagonal entry of Qᵀ M_τ⁻ Q. Infeasible designs score 0 for
    Phi_p and infinity for MV.
    """
    q = q_matrix(Q)
    if not is_feasible(xi, q, tol=tol, rtol=rtol):
        return math.inf if crit.is_mv else 0.0
    if crit.is_mv:
        return float(np.max(np.diag(variance_matrix(xi, q, tol=tol, rtol=rtol))))
    rank = matrix_rank(q)
    return phi_p_positive(c_matrix(xi, q, tol=tol, rtol=rtol).c, rank, crit.p, rtol)


def efficiency_ratio(value, optimal_value, crit):
    if optimal_value <= 0 or not np.isfinite(optimal_value):
        raise InfeasibleDesign(f'optimal criterion value must be positive and finite, got {optimal_value}')
    if crit.is_mv:
        ratio = 0.0 if not np.isfinite(value) or value <= 0 else optimal_value / value
    else:
        ratio = value / optimal_value
    return float(min(max(ratio, 0.0), 1.0 + 1e-9))


def efficiency(xi, Q, crit, optimal_value, tol=None):
    "Phi(xi)/Phi(xi*), inverted for MV; clipped to [0, 1 + 1e-9]."
    return efficiency_ratio(criterion_value(xi, Q, crit, tol=tol), optimal_value, crit)


def closed_form_kind(Q):
    "Which closed-form optimal weights apply to Q: 'controls', 'symmetric' or None."
    if getattr(Q, 'kind', None) == CONTROLS:
        return 'controls'
    if is_completely_symmetric(Q):
        return 'symmetric'
    return None
