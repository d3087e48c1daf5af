"""
Sequential design over a particle posterior: expected improvement for noisy
minimisation, BVSB entropy for classification boundaries, and the space
filling designs (LHD, MED) the candidates are drawn from.

All candidate points live in the scaled input domain [0, 1]^p.
"""
import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize, stats

from . import gp
from .classify import class_predictive_many
from .exceptions import PLGPError, UndefinedAcquisitionError
from .kernel import JITTER, as_design, cross_corr, from_values

logger = logging.getLogger(__name__)

FRESH_LHD = 'fresh-LHD'
FIXED_POOL = 'fixed-pool'
AUGMENTED = 'augmented'


@dataclass(frozen=True, eq=False)
class CandidateSet:
    points: np.ndarray
    provenance: str = FRESH_LHD

    def __post_init__(self):
        points = as_design(self.points)
        if points.size and (points.min() < 0.0 or points.max() > 1.0):
            raise PLGPError('candidate points must lie in the unit cube')
        object.__setattr__(self, 'points', points)

    def __len__(self):
        return self.points.shape[0]

    def without(self, index):
        """The same set with one point removed, e.g. after it was queried."""
        return replace(self, points=np.delete(self.points, index, axis=0))

    def augmented(self, x):
        return CandidateSet(np.vstack([self.points, np.reshape(x, (1, -1))]), AUGMENTED)


@dataclass(frozen=True, eq=False)
class AcquisitionRecord:
    """Outcome of one acquisition round; ``chosen`` is the first argmax."""

    chosen: np.ndarray
    score: float
    index: int
    per_candidate: np.ndarray
    x_star: np.ndarray = None


def expected_improvement(pt, f_min):
    """E max(f_min - Y, 0) for Y ~ Student-t(mean, scale, dof).

    With delta = f_min - mean, s = sqrt(scale), z = delta / s:
    EI = delta T(z) + (dof s + delta^2 / s) t(z) / (dof - 1).
    """
    if pt.dof <= 1:
        raise UndefinedAcquisitionError(f'expected improvement needs dof > 1, got {pt.dof}')
    mean = np.asarray(pt.mean, dtype=float)
    sd = np.sqrt(np.asarray(pt.scale, dtype=float))
    delta = f_min - mean
    with np.errstate(divide='ignore', invalid='ignore'):
        z = delta / sd
        ei = delta * stats.t.cdf(z, pt.dof) + (pt.dof * sd + delta ** 2 / sd) * stats.t.pdf(z, pt.dof) / (pt.dof - 1.0)
    ei = np.where(sd > 0, ei, np.maximum(delta, 0.0))
    ei = np.maximum(ei, 0.0)
    return float(ei) if ei.ndim == 0 else ei


def f_min(ps, mode='mean-surface', probe=None):
    """Current best value: smallest observation or minimum particle-mean surface."""
    if ps.t == 0:
        raise PLGPError('f_min needs at least one observation')
    if mode == 'observed':
        return float(np.min(ps.Z))
    if mode != 'mean-surface':
        raise PLGPError(f'unknown f_min mode {mode!r}')
    points = ps.X if probe is None else (probe.points if isinstance(probe, CandidateSet) else as_design(probe))
    mean, _ = ps.predict(points)
    return float(mean.min())


def map_index(ps):
    """Index of the particle with the highest unnormalised posterior (first on ties)."""
    return int(np.argmax(ps.log_posteriors()))


def map_candidate(ps, seeds):
    """Minimiser of the MAP particle's predictive mean, searched from the best seed."""
    if ps.N == 0:
        raise PLGPError('no particles')
    S = ps.particles[map_index(ps)]

    def surface(x):
        return gp.predict_many(S, ps.X, ps.Z, np.reshape(x, (1, -1))).mean[0]

    seed_points = seeds.points if isinstance(seeds, CandidateSet) else as_design(seeds)
    seed_means = gp.predict_many(S, ps.X, ps.Z, seed_points).mean
    start = seed_points[int(np.argmin(seed_means))]
    best = float(np.min(seed_means))

    try:
        result = optimize.minimize(
            surface, start, method='Nelder-Mead', bounds=[(0.0, 1.0)] * ps.p,
            options={'xatol': 1e-6, 'fatol': 1e-10, 'maxiter': 400 * ps.p},
        )
    except (ValueError, np.linalg.LinAlgError) as exc:
        logger.warning('mean-surface search failed (%s); using the best seed', exc)
        return start.copy()
    x = np.clip(result.x, 0.0, 1.0)
    if not np.all(np.isfinite(x)) or surface(x) > best:
        return start.copy()
    return x


def mean_ei(ps, points, fmin):
    """EI at each point averaged over particles; particles with dof <= 1 add 0."""
    points = as_design(points)
    total = np.zeros(points.shape[0])
    skipped = 0
    for S in ps.particles:
        pt = gp.predict_many(S, ps.X, ps.Z, points)
        if pt.dof <= 1:
            skipped += 1
            continue
        total += expected_improvement(pt, fmin)
    if skipped:
        logger.warning('%d particles with dof <= 1 contribute no expected improvement', skipped)
    return total / ps.N


def choose_next_ei(ps, cands, fmin_mode='mean-surface'):
    """Argmax of particle-averaged EI over the candidates plus the MAP minimiser."""
    x_star = map_candidate(ps, cands)
    pool = cands.augmented(x_star)
    probe = np.vstack([pool.points, ps.X])
    fmin = f_min(ps, fmin_mode, probe)
    scores = mean_ei(ps, pool.points, fmin)
    index = int(np.argmax(scores))
    return AcquisitionRecord(
        chosen=pool.points[index].copy(), score=float(scores[index]), index=index,
        per_candidate=scores, x_star=x_star,
    )


def entropy(probs):
    """-sum p log p along the last axis, with 0 log 0 = 0."""
    return stats.entropy(np.asarray(probs, dtype=float), axis=-1)


def bvsb_entropy(probs):
    """Binary entropy of the two largest probabilities after renormalising them."""
    probs = np.asarray(probs, dtype=float)
    if probs.shape[-1] == 2:
        return entropy(probs)
    top = np.sort(probs, axis=-1)[..., -2:]
    return stats.entropy(top, axis=-1)


def smooth_scores(points, scores, d_s):
    """Kernel-weighted average of the scores, weights exp(-||x - x'||^2 / d_s)."""
    weights = cross_corr(points, points, d_s)
    return weights @ scores / weights.sum(axis=1)


def choose_next_entropy(ps, cands, smoothing=None, L=None):
    """Argmax of the particle-mean BVSB entropy, optionally kernel smoothed.

    ``smoothing`` is None (off), 'map' for the MAP particle's mean range, or
    a range value d_s.
    """
    if len(cands) == 0:
        raise PLGPError('candidate pool is empty')
    L = L or ps.config.class_samples
    scores = np.zeros(len(cands))
    for S, rng in zip(ps.particles, ps.rngs):
        scores += bvsb_entropy(class_predictive_many(S, ps.X, cands.points, L, rng))
    scores /= ps.N

    if smoothing is not None:
        if smoothing == 'map':
            S = ps.particles[map_index(ps)]
            params = S.params if isinstance(S.params, tuple) else (S.params,)
            smoothing = float(np.mean([p.d for p in params]))
        scores = smooth_scores(cands.points, scores, float(smoothing))

    index = int(np.argmax(scores))
    return AcquisitionRecord(
        chosen=cands.points[index].copy(), score=float(scores[index]), index=index,
        per_candidate=scores,
    )


def lhd(n, p, rng):
    """Latin hypercube: one point per stratum [k/n, (k+1)/n) in every dimension."""
    if n < 1 or p < 1:
        raise PLGPError('a Latin hypercube needs n >= 1 points in p >= 1 dimensions')
    strata = np.column_stack([rng.permutation(n) for _ in range(p)])
    return CandidateSet((strata + rng.uniform(size=(n, p))) / n, FRESH_LHD)


def _greedy_variances(pool, start, n, d_ref):
    """Greedy max-variance selection as a pivoted Cholesky of the pool kernel.

    After each pick the conditional variance of every pool point given the
    selected set is 1 - sum of its squared Cholesky row entries, which is the
    log-determinant increment (as exp) of adding that point.
    """
    m = pool.shape[0]
    variances = np.full(m, 1.0 + JITTER)
    rows = np.zeros((m, n))
    selected = []
    pick = start
    for j in range(n):
        selected.append(pick)
        column = cross_corr(pool, pool[pick:pick + 1], d_ref)[:, 0]
        column[pick] = 1.0 + JITTER
        rows[:, j] = (column - rows[:, :j] @ rows[pick, :j]) / np.sqrt(variances[pick])
        variances = variances - rows[:, j] ** 2
        variances[selected] = -np.inf
        pick = int(np.argmax(variances))
    return selected


def _conditional_variances(pool, selected, d_ref):
    K = _corr_of(pool, selected, d_ref)
    k = cross_corr(pool, pool[selected], d_ref)
    return (1.0 + JITTER) - np.einsum('ij,ij->i', k @ K.inverse, k)


def med_indices(n, pool, d_ref=0.5, exchange_passes=0):
    """Greedy maximum entropy subset of ``pool`` (indices in selection order).

    Starts from the point nearest the centroid and repeatedly adds the point
    with the largest conditional variance given the selected set, i.e. the
    largest log-determinant increment. Optional exchange passes then swap
    selected points for pool points while that raises the log-determinant;
    they cost O(n^3) per point and suit small designs only.
    """
    pool = pool.points if isinstance(pool, CandidateSet) else as_design(pool)
    m = pool.shape[0]
    if n > m:
        raise PLGPError(f'pool of {m} points exhausted before selecting {n}')
    if n < 1:
        return []

    centroid = pool.mean(axis=0)
    start = int(np.argmin(np.sum((pool - centroid) ** 2, axis=1)))
    selected = _greedy_variances(pool, start, n, d_ref)

    for _ in range(exchange_passes):
        improved = False
        for pos in range(n):
            rest = selected[:pos] + selected[pos + 1:]
            if not rest:
                break
            variances = _conditional_variances(pool, rest, d_ref)
            variances[rest] = -np.inf
            best = int(np.argmax(variances))
            if best != selected[pos] and variances[best] > variances[selected[pos]] * (1.0 + 1e-12):
                selected[pos] = best
                improved = True
        if not improved:
            break
    return selected


def _corr_of(pool, indices, d_ref):
    values = cross_corr(pool[indices], pool[indices], d_ref)
    values[np.diag_indices_from(values)] = 1.0 + JITTER
    return from_values(values)


def med(n, pool, d_ref=0.5, exchange_passes=0):
    pool_points = pool.points if isinstance(pool, CandidateSet) else as_design(pool)
    return CandidateSet(pool_points[med_indices(n, pool_points, d_ref, exchange_passes)], FIXED_POOL)
