"""Optimal treatment proportions.

Closed forms cover completely symmetric systems (uniform weights) and
comparisons with controls (two-group weights with total control weight
``gamma_p``). Other contrast systems go through ``EntropicMirrorAscent``,
which maximizes log Phi_p over the simplex; E-optimal proportions follow
Phi_p as p decreases towards -inf.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .conf import DEFAULT_TOLERANCES
from .contrasts import CENTERED, CONTROLS, PAIRWISE, is_completely_symmetric
from .core import TreatmentWeights, q_matrix
from .criteria import weights_value
from .exceptions import InvalidControlCount, InvalidP, NonConvergence, UnsupportedCriterion
from .linalg import eigh_sym, matrix_rank, positive_mask, sym_power

logger = logging.getLogger(__name__)

GAMMA_LOWER = 1e-12
GAMMA_MAX_ITER = 200


@dataclass(frozen=True)
class GammaSolution:
    gamma: float
    p: float
    residual: float = 0.0
    iterations: int = 0


def _check_controls(v, g):
    if v is None or g is None or int(g) != g or int(v) != v or not 0 < g < v / 2:
        raise InvalidControlCount(v, g)
    return int(v), int(g)


def gamma_equation(v, g, p):
    "F(γ) and F'(γ); F is increasing on (0, 1/2] with F(0) < 0 <= F(1/2)."

    def func(gamma):
        a, b = gamma, 1.0 - gamma
        f = (v - g - 1) * a ** (1 - p) - (g - 1) * b ** (1 - p) + 2 * a - 1
        df = (v - g - 1) * (1 - p) * a ** (-p) + (g - 1) * (1 - p) * b ** (-p) + 2
        return f, df

    return func


def _newton_bisection(func, lo, hi, tol, maxit=GAMMA_MAX_ITER):
    """Root of an increasing function bracketed by [lo, hi].

    Newton steps are taken while they stay inside the bracket and shrink
    fast enough; otherwise the bracket is bisected.
    """
    f_lo, _ = func(lo)
    f_hi, _ = func(hi)
    if f_lo > 0 or f_hi < 0:
        raise NonConvergence(f'root is not bracketed: F({lo})={f_lo:.3g}, F({hi})={f_hi:.3g}')
    if f_hi == 0:
        return hi, 0.0, 0
    x = 0.5 * (lo + hi)
    dxold = dx = hi - lo
    f, df = func(x)
    for it in range(1, maxit + 1):
        if abs(f) <= tol:
            return x, f, it
        if ((x - hi) * df - f) * ((x - lo) * df - f) >= 0.0 or abs(2.0 * f) > abs(dxold * df):
            dxold = dx
            dx = 0.5 * (hi - lo)
            x = lo + dx
        else:
            dxold = dx
            dx = f / df
            x = x - dx
        f, df = func(x)
        if f < 0.0:
            lo = x
        else:
            hi = x
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(x)):
            return x, f, it
    raise NonConvergence(f'gamma equation did not converge in {maxit} iterations', best=x, value=f, iterations=maxit)


def gamma_p(v, g, p):
    """Optimal total weight of the g controls among v treatments under Phi_p."""
    v, g = _check_controls(v, g)
    p = float(p)
    if math.isnan(p) or p > 0:
        raise InvalidP(p)
    if p == -math.inf:
        return GammaSolution(0.5, p)
    if p == 0:
        return GammaSolution(g / v, p)
    if p == -1:
        gamma = (math.sqrt(g * (v - g)) - g) / (v - 2 * g)
        return GammaSolution(gamma, p, gamma_equation(v, g, p)(gamma)[0])
    func = gamma_equation(v, g, p)
    gamma, residual, iterations = _newton_bisection(func, GAMMA_LOWER, 0.5, DEFAULT_TOLERANCES.gamma)
    logger.debug('gamma_p(v=%d, g=%d, p=%g) = %.12f after %d steps', v, g, p, gamma, iterations)
    return GammaSolution(gamma, p, residual, iterations)


def _two_group_weights(v, g, gamma):
    w = np.empty(v)
    w[:g] = gamma / g
    w[g:] = (1.0 - gamma) / (v - g)
    return TreatmentWeights(w)


def uniform_weights(v):
    return TreatmentWeights(np.full(int(v), 1.0 / int(v)))


def controls_weights(v, g, p):
    v, g = _check_controls(v, g)
    return _two_group_weights(v, g, gamma_p(v, g, p).gamma)


def mv_weights(v, g):
    "MV-optimal proportions for comparisons with controls; identical to the A-optimal ones."
    return controls_weights(v, g, -1.0)


@dataclass
class OptimizationResult:
    weights: TreatmentWeights
    value: float
    iterations: int
    gap: float
    converged: bool
    method: str


class EntropicMirrorAscent:
    """Maximize log Phi_p((Qᵀ diag(w⁻¹) Q)⁺) over the probability simplex.

    The gradient coordinate for treatment u is
    ``w_u⁻² q_uᵀ V^(-p-1) q_u / tr V^(-p)`` with ``V = Qᵀ diag(w⁻¹) Q``;
    its w-weighted mean is 1 and an interior optimum has every coordinate
    equal to 1, so ``max |grad - 1|`` measures stationarity.
    """

    armijo = 1e-4

    def __init__(self, Q, p, tol=1e-7, max_iter=10000, rtol=None):
        if p == -math.inf:
            raise UnsupportedCriterion('mirror ascent needs a finite p; E goes through optimize_weights_e')
        self.q = q_matrix(Q)
        self.rank = matrix_rank(self.q)
        self.p = float(p)
        self.tol = tol
        self.max_iter = max_iter
        self.rtol = DEFAULT_TOLERANCES.rank if rtol is None else rtol

    def objective(self, w):
        vals = eigh_sym(self.q.T @ (self.q / w[:, None]))[0]
        mu = np.sort(vals[positive_mask(vals, self.rtol)])[::-1][: self.rank]
        if mu.size < self.rank:
            return -math.inf
        if self.p == 0:
            return float(-np.mean(np.log(mu)))
        # log of (mean mu^(-p))^(1/p), scaled by the largest mu
        top = mu[0]
        return float(-math.log(top) + math.log(np.mean((mu / top) ** (-self.p))) / self.p)

    def gradient(self, w):
        v_mat = self.q.T @ (self.q / w[:, None])
        # powers of V / top stay bounded for very negative p
        top = float(eigh_sym(v_mat)[0][-1])
        inner = sym_power(v_mat / top, -self.p - 1.0, self.rtol)
        trace = float(np.trace(sym_power(v_mat / top, -self.p, self.rtol)))
        qw = self.q / w[:, None]
        return np.sum((qw @ inner) * qw, axis=1) / (trace * top)

    def run(self, start):
        w = np.asarray(start, dtype=float)
        w = w / w.sum()
        value = self.objective(w)
        step = 1.0
        gap = math.inf
        for it in range(1, self.max_iter + 1):
            grad = self.gradient(w)
            gap = float(np.max(np.abs(grad - 1.0)))
            if gap <= self.tol:
                return w, value, it, gap, True
            while True:
                logits = np.log(w) + step * grad
                trial = np.exp(logits - logits.max())
                trial = np.maximum(trial / trial.sum(), 1e-300)
                trial = trial / trial.sum()
                trial_value = self.objective(trial)
                # rounding slack keeps tiny final steps from being rejected
                slack = 8 * np.finfo(float).eps * max(1.0, abs(value))
                if trial_value >= value + self.armijo * float(grad @ (trial - w)) - slack:
                    break
                step *= 0.5
                if step < 1e-16:
                    return w, value, it, gap, False
            w, value = trial, trial_value
            step = min(step * 2.0, 1e6)
            logger.debug('mirror ascent iteration %d: log phi %.12f, gap %.3g', it, value, gap)
        return w, value, self.max_iter, gap, False


def _better(candidate, incumbent, tie):
    if incumbent is None:
        return True
    if candidate[1] > incumbent[1] + tie * max(1.0, abs(incumbent[1])):
        return True
    if candidate[1] >= incumbent[1] - tie * max(1.0, abs(incumbent[1])):
        return tuple(candidate[0]) < tuple(incumbent[0])
    return False


# Phi_p approaches the E criterion from above as p -> -inf; each stage warm-starts the next
E_CONTINUATION = tuple(-(2.0 ** k) for k in range(11))


def optimize_weights_e(Q, crit, tol=1e-7, max_iter=10000, stages=E_CONTINUATION):
    """E-optimal proportions by continuation along Phi_p, p = -1, -2, ..., -1024.

    For rank r, the Phi_p optimum has E-efficiency at least ``r^(1/p)``;
    ``gap`` reports the relative change of the E value over the last stage.
    The best E value seen over all stages is returned.
    """
    q = q_matrix(Q)
    v = q.shape[0]
    w = np.full(v, 1.0 / v)
    per_stage = max(max_iter // len(stages), 100)
    best, previous, gap, total = None, None, math.inf, 0
    for p in stages:
        solver = EntropicMirrorAscent(Q, p, tol=tol, max_iter=per_stage)
        w, _, iterations, stationarity, converged = solver.run(w)
        total += iterations
        if not converged:
            logger.debug('continuation stage p=%g stopped with gap %.3g', p, stationarity)
        value = weights_value(TreatmentWeights(w), Q, crit)
        if previous is not None:
            gap = abs(value - previous) / max(value, previous)
        previous = value
        if best is None or value > best[1]:
            best = (w, value)
        logger.debug('continuation stage p=%g: E value %.12g', p, value)
    w, value = best
    converged = gap <= DEFAULT_TOLERANCES.optimality
    if not converged:
        logger.warning('E continuation ended with a relative change of %.3g', gap)
    logger.info('generic E weights after %d iterations (last change %.2e)', total, gap)
    return OptimizationResult(TreatmentWeights(w), value, total, gap, converged, 'generic')


def optimize_weights_generic(Q, crit, tol=1e-7, restarts=5, max_iter=10000, seed=0):
    "Multi-start mirror ascent; the first start is uniform, the rest Dirichlet(1) draws."
    if crit.is_mv:
        raise UnsupportedCriterion('MV-optimal weights are only available for comparisons with controls')
    if crit.is_e:
        return optimize_weights_e(Q, crit, tol=tol, max_iter=max_iter)
    solver = EntropicMirrorAscent(Q, crit.p, tol=tol, max_iter=max_iter)
    v = solver.q.shape[0]
    rng = np.random.default_rng(seed)
    starts = [np.full(v, 1.0 / v)] + [rng.dirichlet(np.ones(v)) for _ in range(max(restarts, 1) - 1)]
    best, best_any, total = None, None, 0
    for k, start in enumerate(starts):
        w, value, iterations, gap, converged = solver.run(start)
        total += iterations
        entry = (w, value, iterations, gap)
        if not converged:
            logger.warning('restart %d stopped after %d iterations with gap %.3g', k, iterations, gap)
        if _better(entry, best_any, DEFAULT_TOLERANCES.tie):
            best_any = entry
        if converged and _better(entry, best, DEFAULT_TOLERANCES.tie):
            best = entry
    if best is None:
        w, value, iterations, gap = best_any
        raise NonConvergence(
            f'weight optimization did not reach stationarity {tol:g} (best gap {gap:.3g})',
            best=TreatmentWeights(w), value=value, iterations=total,
        )
    w, value, iterations, gap = best
    logger.info('generic weights for %s after %d iterations (gap %.2e)', crit, total, gap)
    return OptimizationResult(TreatmentWeights(w), math.exp(value), total, gap, True, 'generic')


def optimize_weights_detailed(Q, crit, tol=1e-7, method='auto', seed=0, restarts=5, max_iter=10000):
    v = q_matrix(Q).shape[0]
    kind = getattr(Q, 'kind', None)
    if method not in ('auto', 'generic'):
        raise UnsupportedCriterion(f'unknown weight method {method!r}')
    if method == 'auto':
        w = None
        if kind == CONTROLS:
            w = mv_weights(v, Q.g) if crit.is_mv else controls_weights(v, Q.g, crit.p)
            source = 'controls'
        elif crit.is_mv and kind in (CENTERED, PAIRWISE):
            # the contrast set is closed under permutations of treatments
            w, source = uniform_weights(v), 'symmetric'
        elif not crit.is_mv and is_completely_symmetric(Q):
            w, source = uniform_weights(v), 'symmetric'
        if w is not None:
            value = weights_value(w, Q, crit)
            logger.info('closed-form %s weights for %s: %s', source, crit, w)
            return OptimizationResult(w, value, 0, 0.0, True, source)
    return optimize_weights_generic(Q, crit, tol=tol, restarts=restarts, max_iter=max_iter, seed=seed)


def optimize_weights(Q, crit, tol=1e-7, method='auto', seed=0):
    return optimize_weights_detailed(Q, crit, tol=tol, method=method, seed=seed).weights


def optimal_value(Q, crit, **kwargs):
    "Criterion value of the optimal approximate design (equal to that of its optimal proportions)."
    result = optimize_weights_detailed(Q, crit, **kwargs)
    return weights_value(result.weights, Q, crit)
