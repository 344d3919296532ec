"""Optimal designs with small support from a vertex of a linear program.

Every design with the optimal treatment proportions w*, balanced for the
nuisance regressors and with prescribed condition weights satisfies
``A x = b, x >= 0`` where ``x[u * n + t] = ξ(u, t)``:

    (i)   Σ_t ξ(u,t) = w*_u                                    (v rows)
    (ii)  w*_1⁻¹ Σ_t ξ(1,t) h(t) - w*_u⁻¹ Σ_t ξ(u,t) h(t) = 0   (d(v-1) rows)
    (iii) Σ_u ξ(u,t) = α(t), by default 1/n                    (n rows)

Rows (ii) are written for an orthonormal basis of the column space of the
regressors, so a rank-deficient regressor contributes rank(h)(v-1) rows.

The simplex method returns a vertex of this polytope, whose support has at
most ``v + (v-1)k + n - 1`` points for k the affine dimension of {h(t)}.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .conf import DEFAULT_SEED, DEFAULT_TOLERANCES
from .core import Design, q_matrix
from .exceptions import InvalidDesign, LpInfeasible, LpNumericalError, LpUnbounded, SingularWeights
from .linalg import matrix_rank
from .nuisance import affine_dimension, build_blocktrend

logger = logging.getLogger(__name__)

REFACTOR_EVERY = 50


@dataclass(eq=False)
class LpProblem:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    space: object
    w_star: np.ndarray
    alpha: np.ndarray
    row_tags: tuple
    support_bound: int
    seed: int

    @property
    def shape(self):
        return self.a.shape

    def column(self, u, t):
        return u * self.space.n + t

    def cell(self, j):
        return divmod(int(j), self.space.n)

    def rank(self, rtol=1e-10):
        return matrix_rank(self.a, rtol)

    def residual(self, x):
        return float(np.max(np.abs(self.a @ x - self.b)))

    def rows(self, tag):
        return [i for i, t in enumerate(self.row_tags) if t == tag]


@dataclass(eq=False)
class VertexSolution:
    design: Design
    support_size: int
    basis: list
    objective: float
    support_bound: int
    iterations: int
    redundant_rows: int

    @property
    def bound_attained(self):
        return self.support_size == self.support_bound

    def summary(self):
        return {
            'support_size': self.support_size,
            'support_bound': self.support_bound,
            'bound_attained': self.bound_attained,
            'objective': self.objective,
            'pivots': self.iterations,
            'redundant_rows': self.redundant_rows,
        }


def _check_weights(space, Q, w_star):
    w = np.asarray(getattr(w_star, 'w', w_star), dtype=float)
    if w.size != space.v:
        raise InvalidDesign(f'{w.size} treatment weights for {space.v} treatments')
    if Q is not None and q_matrix(Q).shape[0] != space.v:
        raise InvalidDesign('contrast system and design space disagree on v')
    if np.any(w <= 0):
        raise SingularWeights('the linear program needs strictly positive treatment proportions')
    return w


def balance_basis(h, rtol=1e-10):
    """Orthonormal basis of the column space of ``h``.

    Balance for ``h`` and for any basis of its column space are the same
    condition. Regressors such as exponential trends have entries spread
    over dozens of orders of magnitude; the orthonormal basis keeps the
    balance rows on the scale of the other constraints.
    """
    h = np.asarray(h, dtype=float)
    if h.size == 0:
        return h
    u, s, _ = np.linalg.svd(h, full_matrices=False)
    keep = s > rtol * max(s[0], 1e-300)
    return u[:, keep]


def _balance_rows(space, w, columns):
    "Rows w_1⁻¹ Σ_t ξ(1,t) h_k(t) - w_u⁻¹ Σ_t ξ(u,t) h_k(t), u = 2..v, for each basis column k."
    v, n = space.v, space.n
    h = balance_basis(space.regressor[:, columns])
    rows = []
    for u in range(1, v):
        for k in range(h.shape[1]):
            row = np.zeros(v * n)
            row[0:n] = h[:, k] / w[0]
            row[u * n:(u + 1) * n] = -h[:, k] / w[u]
            # unit max-norm; the right-hand side is zero
            rows.append(row / np.max(np.abs(row)))
    return rows


def _assemble(space, w, alpha, balance, objective_seed, bound):
    v, n = space.v, space.n
    alpha = np.full(n, 1.0 / n) if alpha is None else np.asarray(getattr(alpha, 'alpha', alpha), dtype=float)
    if alpha.size != n:
        raise InvalidDesign(f'{alpha.size} condition weights for {n} conditions')
    rows, rhs, tags = [], [], []
    for u in range(v):
        row = np.zeros(v * n)
        row[u * n:(u + 1) * n] = 1.0
        rows.append(row)
        rhs.append(w[u])
        tags.append('i')
    for tag, columns in balance:
        block = _balance_rows(space, w, columns)
        rows += block
        rhs += [0.0] * len(block)
        tags += [tag] * len(block)
    for t in range(n):
        row = np.zeros(v * n)
        row[t::n] = 1.0
        rows.append(row)
        rhs.append(alpha[t])
        tags.append('iii')
    seed = DEFAULT_SEED if objective_seed is None else int(objective_seed)
    c = np.random.default_rng(seed).uniform(0.0, 1.0, size=v * n)
    lp = LpProblem(np.array(rows), np.array(rhs), c, space, w, alpha, tuple(tags), int(bound), seed)
    logger.info('assembled LP with %d rows and %d columns (support bound %d)', *lp.shape, lp.support_bound)
    return lp


def assemble_lp(space, Q, w_star, objective_seed=None, alpha=None):
    w = _check_weights(space, Q, w_star)
    k = affine_dimension(space.regressor)
    bound = space.v + (space.v - 1) * k + space.n - 1
    balance = [('ii', list(range(space.d)))] if space.d else []
    return _assemble(space, w, alpha, balance, objective_seed, bound)


def assemble_lp_blocktrend(b, l, D, Q, w_star, seed=None):
    """LP for b blocks of l positions with a common trend of degree D.

    Balance splits into per-block conditions (ii.a) and trend conditions
    (ii.b); the rank bound becomes ``(v-1)(b+D) + n - 1``.
    """
    v = q_matrix(Q).shape[0]
    space = build_blocktrend(b, l, D).space(v)
    w = _check_weights(space, Q, w_star)
    balance = [('ii.a', list(range(b))), ('ii.b', list(range(b, b + D + 1)))]
    bound = (v - 1) * (b + D) + space.n - 1
    return _assemble(space, w, None, balance, seed, bound)


class RevisedSimplex:
    """Two-phase revised simplex on ``min cᵀx, Ax = b, x >= 0`` with Bland's rule.

    The basis inverse is kept explicitly, updated by one eta step per pivot
    and recomputed from scratch every ``refactor_every`` pivots. Redundant
    rows keep their artificial variable in the basis at level zero.
    """

    def __init__(self, a, b, c, tol=None, feasibility_tol=None, refactor_every=REFACTOR_EVERY, max_iter=None):
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.c = np.asarray(c, dtype=float)
        self.tol = DEFAULT_TOLERANCES.lp_pivot if tol is None else tol
        self.feasibility_tol = DEFAULT_TOLERANCES.lp_residual if feasibility_tol is None else feasibility_tol
        self.refactor_every = refactor_every
        m, n = self.a.shape
        self.max_iter = max_iter or 50 * (m + n)
        self.pivots = 0

    def _refactor(self):
        try:
            self.binv = np.linalg.inv(self.full[:, self.basis])
        except np.linalg.LinAlgError:
            raise LpNumericalError('basis matrix became singular') from None
        x_b = self.binv @ self.rhs
        if np.min(x_b) < -1e3 * self.feasibility_tol:
            raise LpNumericalError(f'basic solution lost feasibility (min {np.min(x_b):.3g})')
        self.x_b = np.maximum(x_b, 0.0)

    def _pivot(self, r, j, d):
        theta = self.x_b[r] / d[r]
        self.x_b = self.x_b - theta * d
        self.x_b[r] = theta
        self.basis[r] = j
        pivot_row = self.binv[r] / d[r]
        self.binv -= np.outer(d, pivot_row)
        self.binv[r] = pivot_row
        self.pivots += 1
        if self.pivots % self.refactor_every == 0:
            self._refactor()
        else:
            self.x_b = np.maximum(self.x_b, 0.0)

    def _iterate(self, cost, allowed):
        start = self.pivots
        while self.pivots - start < self.max_iter:
            y = cost[self.basis] @ self.binv
            reduced = cost - y @ self.full
            reduced[self.basis] = 0.0
            entering = np.nonzero(allowed & (reduced < -self.tol))[0]
            if entering.size == 0:
                return self.pivots - start
            j = entering[0]
            d = self.binv @ self.full[:, j]
            # pivot threshold relative to the column
            rows = np.nonzero(d > self.tol * max(1.0, np.max(np.abs(d))))[0]
            if rows.size == 0:
                raise LpUnbounded(f'column {j} can increase without bound')
            ratios = self.x_b[rows] / d[rows]
            theta = ratios.min()
            tied = rows[ratios <= theta + 1e-12 * max(1.0, theta)]
            r = tied[np.argmin(self.basis[tied])]
            self._pivot(r, j, d)
        raise LpNumericalError(f'simplex did not terminate within {self.max_iter} pivots')

    def _drive_out_artificials(self, n):
        redundant = []
        for r in range(len(self.basis)):
            if self.basis[r] < n:
                continue
            row = self.binv[r] @ self.full[:, :n]
            row[self.basis[self.basis < n]] = 0.0
            candidates = np.nonzero(np.abs(row) > self.tol)[0]
            if candidates.size == 0:
                redundant.append(r)
                continue
            j = candidates[np.argmax(np.abs(row[candidates]))]
            self.x_b[r] = 0.0
            self._pivot(r, j, self.binv @ self.full[:, j])
        return redundant

    def solve(self):
        m, n = self.a.shape
        sign = np.where(self.b < 0, -1.0, 1.0)
        self.full = np.hstack([self.a * sign[:, None], np.eye(m)])
        self.rhs = self.b * sign
        self.basis = np.arange(n, n + m)
        self.binv = np.eye(m)
        self.x_b = self.rhs.copy()
        allowed = np.ones(n + m, dtype=bool)

        phase1 = self._iterate(np.concatenate([np.zeros(n), np.ones(m)]), allowed)
        self._refactor()
        infeasibility = float(self.x_b[self.basis >= n].sum())
        if infeasibility > self.feasibility_tol * max(1.0, np.max(np.abs(self.rhs))):
            raise LpInfeasible(f'phase 1 ended with infeasibility {infeasibility:.3g}')
        redundant = self._drive_out_artificials(n)
        logger.debug('phase 1: %d pivots, %d redundant rows', phase1, len(redundant))

        allowed[n:] = False
        phase2 = self._iterate(np.concatenate([self.c, np.zeros(m)]), allowed)
        self._refactor()
        x = np.zeros(n + m)
        x[self.basis] = self.x_b
        x = x[:n]
        residual = float(np.max(np.abs(self.a @ x - self.b))) if m else 0.0
        if residual > self.feasibility_tol:
            raise LpNumericalError(f'vertex violates the constraints by {residual:.3g}')
        logger.debug('phase 2: %d pivots', phase2)
        basis = sorted(int(j) for j in self.basis if j < n)
        return x, basis, phase1 + phase2, len(redundant)


def solve_vertex(lp, tol=None):
    """Solve ``lp`` with the revised simplex and return the vertex design."""
    tol = DEFAULT_TOLERANCES if tol is None else tol
    witness = np.outer(lp.w_star, lp.alpha).ravel()
    if lp.residual(witness) > tol.lp_residual:
        raise LpInfeasible(f'product design violates the constraints by {lp.residual(witness):.3g}')
    solver = RevisedSimplex(lp.a, lp.b, lp.c, tol=tol.lp_pivot, feasibility_tol=tol.lp_residual)
    x, basis, pivots, redundant = solver.solve()
    x[x <= tol.support] = 0.0
    design = Design.from_dense(lp.space, x.reshape(lp.space.v, lp.space.n), normalize=True)
    solution = VertexSolution(
        design=design,
        support_size=design.support_size,
        basis=basis,
        objective=float(lp.c @ x),
        support_bound=lp.support_bound,
        iterations=pivots,
        redundant_rows=redundant,
    )
    logger.info(
        'LP vertex: support %d (bound %d, minimum %d) after %d pivots',
        solution.support_size, solution.support_bound, lp.space.n, pivots,
    )
    if solution.support_size > solution.support_bound:
        logger.warning('support %d exceeds the vertex bound %d', solution.support_size, solution.support_bound)
    return solution


def construct_vertex_design(space, Q, w_star, seed=None, alpha=None, tol=None):
    "Assemble and solve the LP in one step."
    return solve_vertex(assemble_lp(space, Q, w_star, seed, alpha=alpha), tol=tol)
