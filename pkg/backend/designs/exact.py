"""Exact run orders with one trial per condition.

``enumerate_exact`` completes a small-support approximate design by trying
every treatment assignment on its free conditions; ``brute_force_exact``
tries all v**n run orders. Both score designs in vectorized batches and keep
the first best sequence in lexicographic order. ``best_exact_design`` runs
the completion over several approximate designs and improves the winner by
exchanges of single positions.
"""
import logging
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .conf import DEFAULT_TOLERANCES
from .core import Design, q_matrix
from .criteria import criterion_value, efficiency_ratio, phi_of_eigenvalues
from .exceptions import EnumerationTooLarge, InvalidDesign, NonUniformAlpha, NonUnitColumn
from .linalg import eigh_sym, matrix_rank, pinv_sym, positive_mask

logger = logging.getLogger(__name__)

DEFAULT_CAP = 10 ** 7
BRUTE_FORCE_CAP = 10 ** 6
SUPPORTED = 'supported'
ALL = 'all'


@dataclass
class SlotAnalysis:
    fixed: dict
    free: list
    candidates: dict

    @property
    def search_size(self):
        return math.prod(len(self.candidates[t]) for t in self.free)


@dataclass
class ExactResult:
    design: Design
    sequence: list
    value: float
    efficiency: float = None
    evaluated: int = 0
    pruned: bool = False
    slots: SlotAnalysis = None
    extra: dict = field(default_factory=dict)

    def replication_counts(self):
        return np.bincount(self.sequence, minlength=self.design.space.v)


def analyze_slots(xi, support_tol=None, alpha_tol=None):
    "Split conditions into fixed ones (one supported treatment) and free ones."
    support_tol = DEFAULT_TOLERANCES.support if support_tol is None else support_tol
    x = xi.dense()
    n = xi.space.n
    alpha = x.sum(axis=0)
    empty = [xi.space.conditions[t] for t in range(n) if alpha[t] <= support_tol]
    if empty:
        raise NonUnitColumn(f'condition(s) {", ".join(empty)} carry no weight')
    if alpha_tol is not None and np.max(np.abs(alpha - 1.0 / n)) > alpha_tol:
        raise NonUniformAlpha(f'condition weights differ from 1/{n}; one trial per condition is required')
    fixed, free, candidates = {}, [], {}
    for t in range(n):
        supported = [int(u) for u in np.nonzero(x[:, t] > support_tol)[0]]
        if len(supported) == 1:
            fixed[t] = supported[0]
        else:
            free.append(t)
            candidates[t] = supported
    return SlotAnalysis(fixed, free, candidates)


def replication_band(w, size):
    "Floor and ceiling of size * w, the replication counts a rounding of w can reach."
    target = np.asarray(getattr(w, 'w', w), dtype=float) * size
    lower = np.floor(target + 1e-9).astype(int)
    upper = np.ceil(target - 1e-9).astype(int)
    return lower, upper


class ExactScorer:
    """Criterion values of many one-trial-per-condition sequences at once.

    With one trial per condition M22 does not depend on the sequence, so its
    pseudo-inverse is computed once.
    """

    def __init__(self, space, Q, crit, tol=None):
        tol = DEFAULT_TOLERANCES if tol is None else tol
        self.space = space
        self.q = q_matrix(Q)
        self.crit = crit
        self.rank = matrix_rank(self.q, tol.rank)
        self.rtol = tol.rank
        self.feasibility = tol.feasibility
        h = space.regressor
        self.h = h
        self.m22_pinv = pinv_sym(h.T @ h / space.n, tol.rank) if space.d else np.zeros((0, 0))

    def chunk_size(self):
        return max(1000, 4_000_000 // (self.space.n * self.space.v))

    def values(self, sequences):
        seq = np.asarray(sequences, dtype=np.int64)
        if seq.ndim == 1:
            seq = seq[None, :]
        n, v = self.space.n, self.space.v
        onehot = (seq[:, :, None] == np.arange(v)).astype(float)
        counts = onehot.sum(axis=1) / n
        mt = counts[:, :, None] * np.eye(v)
        if self.space.d:
            m12 = np.einsum('btu,td->bud', onehot, self.h) / n
            mt = mt - m12 @ self.m22_pinv @ np.swapaxes(m12, -1, -2)
        vals, vecs = eigh_sym(mt)
        keep = positive_mask(vals, self.rtol)
        inverse = np.where(keep, 1.0 / np.where(keep, vals, 1.0), 0.0)
        proj = (vecs * keep[:, None, :]) @ np.swapaxes(vecs, -1, -2)
        residual = np.max(np.abs(self.q - proj @ self.q), axis=(-2, -1))
        feasible = residual <= self.feasibility
        pinv = (vecs * inverse[:, None, :]) @ np.swapaxes(vecs, -1, -2)
        var = np.einsum('us,buw,wt->bst', self.q, pinv, self.q)
        if self.crit.is_mv:
            out = np.max(np.diagonal(var, axis1=-2, axis2=-1), axis=-1)
            return np.where(feasible, out, np.inf)
        mu = eigh_sym(var)[0][:, -self.rank:]
        # positive eigenvalues of C are the reciprocals of those of Qᵀ M_τ⁺ Q
        c_eigs = np.where(mu > 0, 1.0 / np.where(mu > 0, mu, 1.0), 0.0)
        out = np.atleast_1d(phi_of_eigenvalues(c_eigs, self.crit.p))
        return np.where(feasible, out, 0.0)

    def scores(self, sequences):
        "Values to maximize; designs that cannot estimate the contrasts score -inf."
        vals = self.values(sequences)
        ok = np.isfinite(vals) & (vals > 0)
        return np.where(ok, self.crit.score(np.where(ok, vals, 1.0)), -np.inf)


class _Best:
    "Running maximum that only moves on a strict improvement beyond the tie tolerance."

    def __init__(self, tie):
        self.tie = tie
        self.score = -math.inf
        self.sequence = None

    def offer(self, sequences, scores):
        if not len(scores):
            return
        top = float(np.max(scores))
        if top == -math.inf:
            return
        if self.sequence is not None and top <= self.score + self.tie * max(1.0, abs(self.score)):
            return
        first = int(np.nonzero(scores >= top - self.tie * max(1.0, abs(top)))[0][0])
        self.score = float(scores[first])
        self.sequence = [int(u) for u in sequences[first]]


def _digits(indices, radices):
    "Mixed-radix digits of ``indices``, most significant first."
    out = np.empty((len(indices), len(radices)), dtype=np.int64)
    rest = indices.copy()
    for i in range(len(radices) - 1, -1, -1):
        out[:, i] = rest % radices[i]
        rest //= radices[i]
    return out


def _result(space, sequence, score, crit, evaluated, **extra):
    value = -score if crit.is_mv else score
    design = Design.from_sequence(space, sequence)
    return ExactResult(design, sequence, value, evaluated=evaluated, **extra)


def brute_force_exact(space, Q, crit, cap=DEFAULT_CAP, tol=None):
    "Best of all v**n run orders; ties go to the lexicographically smallest."
    tol = DEFAULT_TOLERANCES if tol is None else tol
    total = space.v ** space.n
    if total > cap:
        raise EnumerationTooLarge(total, cap, 'use enumerate_exact on a small-support design instead')
    scorer = ExactScorer(space, Q, crit, tol)
    best = _Best(tol.tie)
    radices = [space.v] * space.n
    step = scorer.chunk_size()
    for start in range(0, total, step):
        seqs = _digits(np.arange(start, min(start + step, total), dtype=np.int64), radices)
        best.offer(seqs, scorer.scores(seqs))
    if best.sequence is None:
        raise InvalidDesign('no run order makes the contrasts estimable')
    logger.info('brute force over %d run orders: best %s = %.10g', total, crit, abs(best.score))
    return _result(space, best.sequence, best.score, crit, total)


def enumerate_exact(xi, Q, crit, candidate_rule=SUPPORTED, optimal_value=None, prune=True,
                    cap=DEFAULT_CAP, tol=None, w_target=None):
    """Complete an approximate design into the best exact run order.

    Fixed conditions keep their single treatment; free conditions range over
    their supported treatments (or all treatments). With ``prune`` only
    completions whose replication counts lie in the floor/ceiling band of
    n * w are scored; if no completion fits the band the search is repeated
    without it. The efficiency is relative to ``optimal_value``, by default
    the criterion value of ``xi`` itself.
    """
    tol = DEFAULT_TOLERANCES if tol is None else tol
    space = xi.space
    v, n = space.v, space.n
    slots = analyze_slots(xi, tol.support)
    if candidate_rule == ALL:
        candidates = {t: list(range(v)) for t in slots.free}
    elif candidate_rule == SUPPORTED:
        candidates = slots.candidates
    else:
        raise InvalidDesign(f'unknown candidate rule {candidate_rule!r}')
    radices = [len(candidates[t]) for t in slots.free]
    total = math.prod(radices)
    if total > cap:
        hint = 'try the supported candidate rule' if candidate_rule == ALL else 'raise the cap or shrink the support'
        raise EnumerationTooLarge(total, cap, hint)

    base = np.zeros(n, dtype=np.int64)
    for t, u in slots.fixed.items():
        base[t] = u
    free = np.array(slots.free, dtype=np.int64)
    lookup = [np.array(candidates[t], dtype=np.int64) for t in slots.free]
    w = xi.treatment_weights().w if w_target is None else np.asarray(getattr(w_target, 'w', w_target))
    lower, upper = replication_band(w, n)

    scorer = ExactScorer(space, Q, crit, tol)
    step = scorer.chunk_size()

    def search(use_band):
        best, evaluated = _Best(tol.tie), 0
        for start in range(0, max(total, 1), step):
            digits = _digits(np.arange(start, min(start + step, total), dtype=np.int64), radices)
            seqs = np.tile(base, (len(digits), 1))
            for i, t in enumerate(free):
                seqs[:, t] = lookup[i][digits[:, i]]
            if use_band:
                counts = np.stack([(seqs == u).sum(axis=1) for u in range(v)], axis=1)
                seqs = seqs[np.all((counts >= lower) & (counts <= upper), axis=1)]
            evaluated += len(seqs)
            if len(seqs):
                best.offer(seqs, scorer.scores(seqs))
        return best, evaluated

    best, evaluated = search(prune)
    pruned = prune
    if best.sequence is None and prune:
        logger.warning('no completion has replication counts in the band %s..%s; searching without it', lower, upper)
        best, evaluated = search(False)
        pruned = False
    if best.sequence is None:
        raise InvalidDesign('no completion makes the contrasts estimable')
    if optimal_value is None:
        optimal_value = criterion_value(xi, Q, crit)
    result = _result(space, best.sequence, best.score, crit, evaluated, pruned=pruned, slots=slots)
    result.efficiency = efficiency_ratio(result.value, optimal_value, crit)
    logger.info(
        'enumerated %d of %d completions over %d free conditions: %s, efficiency %.6f',
        evaluated, total, len(slots.free), format_sequence(best.sequence, space), result.efficiency,
    )
    return result


def exchange_neighbours(sequence, v):
    "All run orders one treatment change or one swap of two positions away from ``sequence``."
    seq = np.asarray(sequence, dtype=np.int64)
    n = seq.size
    t_idx = np.repeat(np.arange(n), v)
    u_idx = np.tile(np.arange(v), n)
    change = u_idx != seq[t_idx]
    singles = np.tile(seq, (int(change.sum()), 1))
    singles[np.arange(len(singles)), t_idx[change]] = u_idx[change]
    i, j = np.triu_indices(n, 1)
    differ = seq[i] != seq[j]
    i, j = i[differ], j[differ]
    swaps = np.tile(seq, (len(i), 1))
    rows = np.arange(len(i))
    swaps[rows, i] = seq[j]
    swaps[rows, j] = seq[i]
    return np.vstack([singles, swaps])


def improve_exact(result, Q, crit, optimal_value=None, tol=None, max_rounds=None):
    """Steepest-ascent exchange from an exact run order.

    Each round scores every single treatment change and every swap of two
    positions and moves to the best one, until no neighbour improves on the
    current value beyond the tie tolerance.
    """
    tol = DEFAULT_TOLERANCES if tol is None else tol
    space = result.design.space
    scorer = ExactScorer(space, Q, crit, tol)
    step = scorer.chunk_size()
    seq = np.asarray(result.sequence, dtype=np.int64)
    current = float(scorer.scores(seq)[0])
    max_rounds = 10 * space.n if max_rounds is None else max_rounds
    rounds, evaluated = 0, 0
    while rounds < max_rounds:
        neighbours = exchange_neighbours(seq, space.v)
        best = _Best(tol.tie)
        for start in range(0, len(neighbours), step):
            chunk = neighbours[start:start + step]
            best.offer(chunk, scorer.scores(chunk))
        evaluated += len(neighbours)
        if best.sequence is None or best.score <= current + tol.tie * max(1.0, abs(current)):
            break
        seq, current = np.array(best.sequence, dtype=np.int64), best.score
        rounds += 1
    if rounds == 0:
        return result
    sequence = [int(u) for u in seq]
    improved = _result(
        space, sequence, current, crit, result.evaluated + evaluated,
        pruned=result.pruned, slots=result.slots, extra={**result.extra, 'exchanges': rounds},
    )
    if optimal_value is not None:
        improved.efficiency = efficiency_ratio(improved.value, optimal_value, crit)
    logger.info('exchange: %d improving moves, %s = %.10g', rounds, crit, improved.value)
    return improved


def best_exact_design(designs, Q, crit, optimal_value, candidate_rule=SUPPORTED, cap=DEFAULT_CAP,
                      brute_force_cap=BRUTE_FORCE_CAP, polish=True, tol=None):
    """Best exact run order over completions of several approximate designs.

    ``designs`` yields ``(label, design)`` pairs, typically vertex designs for
    different LP objectives. Each is completed with ``candidate_rule`` and,
    when the search fits under ``cap``, also with the ``all`` rule. Problems
    with at most ``brute_force_cap`` run orders are also searched completely.
    The winner is then improved by exchanges when ``polish`` is set.
    """
    tol = DEFAULT_TOLERANCES if tol is None else tol
    found, space, skipped = [], None, None
    for label, xi in designs:
        space = xi.space
        rules = [candidate_rule]
        if candidate_rule != ALL and space.v ** len(analyze_slots(xi, tol.support).free) <= cap:
            rules.append(ALL)
        for rule in rules:
            try:
                result = enumerate_exact(
                    xi, Q, crit, candidate_rule=rule, optimal_value=optimal_value, cap=cap, tol=tol,
                )
            except EnumerationTooLarge as exc:
                skipped = exc
                continue
            result.extra.update(source=label, candidates=rule, method='completion')
            found.append(result)
    if space is not None and space.v ** space.n <= brute_force_cap:
        result = brute_force_exact(space, Q, crit, cap=brute_force_cap, tol=tol)
        result.efficiency = efficiency_ratio(result.value, optimal_value, crit)
        result.extra.update(method='brute-force')
        found.append(result)
    if not found:
        raise skipped or InvalidDesign('no approximate design to complete')
    best = found[0]
    for result in found[1:]:
        if crit.score(result.value) > crit.score(best.value) + tol.tie * max(1.0, abs(best.value)):
            best = result
    if polish and best.extra.get('method') != 'brute-force':
        best = improve_exact(best, Q, crit, optimal_value=optimal_value, tol=tol)
    logger.info('best exact design (%s): efficiency %.6f', best.extra.get('method'), best.efficiency)
    return best


def format_sequence(sequence, space):
    """Treatments as 1-based digits (comma separated when v > 9).

    Conditions labelled ``block:position`` are printed per block as
    ``b1=..., b2=...``.
    """
    sep = '' if space.v <= 9 else ','
    labels = space.conditions
    if all(':' in label for label in labels):
        groups = {}
        for label, u in zip(labels, sequence):
            groups.setdefault(label.split(':', 1)[0], []).append(str(u + 1))
        return ', '.join(f'b{key}={sep.join(items)}' for key, items in groups.items())
    return sep.join(str(u + 1) for u in sequence)


def parse_sequence(text, space):
    "Inverse of ``format_sequence``; returns 0-based treatments."
    text = text.strip()
    if '=' in text:
        chunks = [c for c in re.split(r'[,;\s]*\bb?\w+\s*=\s*', text) if c.strip()]
        tokens = [tok for chunk in chunks for tok in _tokens(chunk, space.v)]
    else:
        tokens = _tokens(text, space.v)
    if len(tokens) != space.n:
        raise InvalidDesign(f'sequence has {len(tokens)} treatments, the space has {space.n} conditions')
    try:
        seq = [int(tok) - 1 for tok in tokens]
    except ValueError:
        raise InvalidDesign(f'cannot read treatments from {text!r}') from None
    if any(not 0 <= u < space.v for u in seq):
        raise InvalidDesign(f'treatments must lie in 1..{space.v}')
    return seq


def _tokens(text, v):
    text = text.strip()
    if ',' in text or ' ' in text or v > 9:
        return [tok for tok in text.replace(',', ' ').split() if tok]
    return list(text)
